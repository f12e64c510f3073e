//! Two-stage replicated M/M/1 experiment for stochastic kriging.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::experiment::{check_unique_labels, in_pool, result_row, sort_rows, BenchResult, ScoringData};
use super::profiles::FitProfile;
use crate::seeds::derive;
use crate::testbed::{mm1_analytic, mm1_simulate, Mm1Config, Mm1Error};

/// Arrival rates of the design points.
pub const SK_DESIGN: [f64; 7] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const LOW: f64 = 0.3;
const HIGH: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct SkSpec {
    pub n1: usize,
    pub n2: usize,
    pub profiles: Vec<FitProfile>,
    pub macroreps: usize,
    pub seed: u64,
    /// Arrivals per simulation replicate.
    pub customers: usize,
    /// Points of the evaluation grid on [0.3, 0.9].
    pub grid: usize,
    pub jobs: usize,
}

impl SkSpec {
    pub fn new(n2: usize, profiles: Vec<FitProfile>, seed: u64) -> Self {
        Self { n1: 5, n2, profiles, macroreps: 5, seed, customers: 50_000, grid: 200, jobs: 1 }
    }
}

/// Splits `n2` replicates over the points: one each, the rest proportional
/// to `s` with largest-remainder rounding (ties to the lower index).
pub fn allocate(n2: usize, s: &[f64]) -> Vec<usize> {
    let k = s.len();
    assert!(k > 0 && n2 >= k, "need at least one replicate per point");
    let spare = n2 - k;
    let total: f64 = s.iter().sum();
    let shares: Vec<f64> = if total > 0.0 && total.is_finite() {
        s.iter().map(|v| spare as f64 * v / total).collect()
    } else {
        vec![spare as f64 / k as f64; k]
    };
    let mut alloc: Vec<usize> = shares.iter().map(|v| v.floor() as usize).collect();
    let mut left = spare - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (shares[a] - shares[a].floor(), shares[b] - shares[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
    }
    alloc.iter().map(|a| a + 1).collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Replicate outputs at every design point after both stages, plus the stage-2 allocation.
pub fn simulate_two_stage(spec: &SkSpec, macrorep: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>), Mm1Error> {
    let seed = derive(spec.seed, &[macrorep as u64]);
    let run = |i: usize, j: usize| {
        mm1_simulate(&Mm1Config::new(SK_DESIGN[i], spec.customers, derive(seed, &[i as u64, j as u64])))
    };
    let mut reps: Vec<Vec<f64>> = (0..SK_DESIGN.len())
        .map(|i| (0..spec.n1).map(|j| run(i, j)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let s: Vec<f64> = reps.iter().map(|r| mean_var(r).1.sqrt()).collect();
    let extra = allocate(spec.n2, &s);
    for (i, r) in reps.iter_mut().enumerate() {
        for j in 0..extra[i] {
            r.push(run(i, spec.n1 + j)?);
        }
    }
    Ok((reps, extra))
}

fn sk_data(spec: &SkSpec, macrorep: usize) -> Result<ScoringData, Mm1Error> {
    let (reps, _) = simulate_two_stage(spec, macrorep)?;
    let to_unit = |a: f64| (a - LOW) / (HIGH - LOW);
    let x = DMatrix::from_fn(SK_DESIGN.len(), 1, |i, _| to_unit(SK_DESIGN[i]));
    let (means, noise): (Vec<f64>, Vec<f64>) = reps
        .iter()
        .map(|r| {
            let (m, v) = mean_var(r);
            (m, v / r.len() as f64)
        })
        .unzip();
    let grid: Vec<f64> = (0..spec.grid).map(|k| LOW + (HIGH - LOW) * k as f64 / (spec.grid - 1) as f64).collect();
    let x_pred = DMatrix::from_fn(spec.grid, 1, |k, _| to_unit(grid[k]));
    let truth: Vec<f64> = grid.iter().map(|&a| mm1_analytic(a).map(|(m, _)| m)).collect::<Result<_, _>>()?;
    let mut data = ScoringData::new(x, &means, x_pred, &truth);
    data.variances = Some(noise.iter().map(|&v| data.scaling.scale_variance(v)).collect());
    Ok(data)
}

/// Two-stage stochastic-kriging experiment on the M/M/1 mean curve.
pub fn run_sk_mm1(spec: &SkSpec) -> Result<Vec<BenchResult>, String> {
    check_unique_labels(&spec.profiles)?;
    if let Some(p) = spec.profiles.iter().find(|p| !p.is_stochastic()) {
        return Err(format!("profile {} does not model replicate noise", p.label));
    }
    if spec.n2 < SK_DESIGN.len() {
        return Err(format!("n2 must be at least {}", SK_DESIGN.len()));
    }
    if spec.n1 < 2 || spec.grid < 2 {
        return Err("need n1 ≥ 2 and a grid of at least two points".into());
    }
    let mut rows = in_pool(spec.jobs, || {
        let data: Vec<ScoringData> = (0..spec.macroreps)
            .into_par_iter()
            .map(|r| sk_data(spec, r))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let cells: Vec<(usize, &FitProfile)> =
            (0..spec.macroreps).flat_map(|r| spec.profiles.iter().map(move |p| (r, p))).collect();
        Ok::<_, String>(
            cells
                .into_par_iter()
                .map(|(r, p)| {
                    let seed = derive(spec.seed, &[r as u64, crate::seeds::label_tag(&p.label)]);
                    result_row("mm1", 1, spec.n2, r, seed, &data[r], p)
                })
                .collect::<Vec<_>>(),
        )
    })?;
    sort_rows(&mut rows);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_spread() {
        assert_eq!(allocate(14, &[1.0; 7]), vec![2; 7]);
        assert_eq!(allocate(17, &[2.0; 7]), vec![3, 3, 3, 2, 2, 2, 2]);
        assert_eq!(allocate(10, &[0.0; 7]), vec![2, 2, 2, 1, 1, 1, 1]);
    }

    #[test]
    fn all_spare_to_the_noisy_point() {
        let a = allocate(200, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(a, vec![1, 1, 1, 1, 1, 1, 194]);
    }

    #[test]
    fn proportional_shares() {
        // spare 10 split 1:4 → 2 and 8
        assert_eq!(allocate(12, &[1.0, 4.0]), vec![3, 9]);
    }

    proptest::proptest! {
        #[test]
        fn allocation_sums_and_minimum(
            s in proptest::collection::vec(0.0f64..10.0, 1..10),
            extra in 0usize..500,
        ) {
            let n2 = s.len() + extra;
            let a = allocate(n2, &s);
            proptest::prop_assert_eq!(a.iter().sum::<usize>(), n2);
            proptest::prop_assert!(a.iter().all(|&v| v >= 1));
        }
    }
}
