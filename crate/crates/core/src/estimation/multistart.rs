//! Space-filling, clustered multistart around [`minimize`](super::minimize).

use rand::Rng;

use crate::designs;
use crate::seeds;

use super::deviance::DevianceProblem;
use super::lbfgsb::{minimize, MinimizeResult, OptimizeError};
use super::{Bounds, EstimationError, FitConfig};

const KMEANS_MAX_ITERS: usize = 100;

/// Outcome of a single optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub result: Result<MinimizeResult, OptimizeError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    /// Best search point (correlation coordinates, then the extra coordinate if any).
    pub x: Vec<f64>,
    pub value: f64,
    /// Index into `outcomes` of the winning run.
    pub best_start: usize,
    pub outcomes: Vec<StartOutcome>,
    pub candidates_evaluated: usize,
}

impl MultistartResult {
    pub fn total_iterations(&self) -> usize {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok()).map(|r| r.iterations).sum()
    }

    pub fn failed_starts(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }
}

/// k-means with k-means++ seeding and Lloyd iterations.
///
/// Returns the centers and the cluster index of every point. An empty
/// cluster is reseeded at the first point of `points` (callers pass points
/// ordered best-first) that is not already a center.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let m = points.len();
    if m == 0 || k == 0 {
        return (Vec::new(), Vec::new());
    }
    let k = k.min(m);
    let mut rng = seeds::rng(seed);
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..m)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = m - 1;
            for (i, w) in nearest.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..m)
        };
        centers.push(points[pick].clone());
        for (nd, p) in nearest.iter_mut().zip(points) {
            *nd = nd.min(dist2(p, centers.last().expect("just pushed")));
        }
    }

    let mut assign = vec![usize::MAX; m];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = closest(p, &centers);
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else if let Some(p) = points.iter().find(|p| !centers.contains(p)) {
                centers[c] = p.clone();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        assign[i] = closest(p, &centers);
    }
    (centers, assign)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn closest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, center) in centers.iter().enumerate() {
        let v = dist2(p, center);
        if v < best.0 {
            best = (v, c);
        }
    }
    best.1
}

/// Start points for the optimizer, in the box `bounds`.
///
/// Scores `n_lhs_candidates` maximin-LHS points with `objective`, keeps the
/// best `survivor_fraction` (at least `n_clusters`), clusters them with
/// k-means and returns the centers, followed by the best candidate when it
/// is not already one of them.
pub fn generate_starts<F>(bounds: &[(f64, f64)], config: &FitConfig, mut objective: F) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = bounds.len();
    let m = config.candidates_for(d);
    let unit = designs::maximin_lhs(m, d, seeds::derive(config.seed, &[seeds::label_tag("starts")]), designs::PREDICTION_SWAPS);
    let to_box = |u: &[f64]| -> Vec<f64> { u.iter().zip(bounds).map(|(&v, &(lo, hi))| lo + v * (hi - lo)).collect() };
    let mut scored: Vec<(f64, usize, Vec<f64>)> = (0..m)
        .map(|i| {
            let u: Vec<f64> = unit.row(i).iter().copied().collect();
            let value = objective(&to_box(&u));
            (if value.is_nan() { f64::INFINITY } else { value }, i, u)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let k = config.clusters().min(m);
    let keep = ((config.survivor_fraction * m as f64).ceil() as usize).max(k).min(m);
    let finite = scored.iter().take_while(|s| s.0.is_finite()).count();
    let survivors: Vec<Vec<f64>> =
        scored.iter().take(if finite >= k { keep.min(finite) } else { keep }).map(|s| s.2.clone()).collect();

    let (centers, _) = kmeans(&survivors, k, seeds::derive(config.seed, &[seeds::label_tag("kmeans")]));
    let mut starts: Vec<Vec<f64>> = centers.iter().map(|c| to_box(c)).collect();
    let best = to_box(&scored[0].2);
    if !starts.contains(&best) {
        starts.push(best);
    }
    starts
}

/// Minimizes the deviance from every generated start and keeps the lowest
/// value; ties go to the earliest start.
pub fn multistart_fit(problem: &DevianceProblem, config: &FitConfig) -> Result<MultistartResult, EstimationError> {
    let d = problem.d();
    config.validate(d).map_err(EstimationError::InvalidInput)?;
    let theta_bounds = config.bounds_for(d);
    let extra = problem.extra_bounds_and_start();
    let mut full_bounds: Bounds = theta_bounds.clone();
    if let Some((b, _)) = extra {
        full_bounds.push(b);
    }
    let extend = |s: &[f64]| -> Vec<f64> {
        let mut v = s.to_vec();
        if let Some((_, start)) = extra {
            v.push(start);
        }
        v
    };

    let mut candidates_evaluated = 0;
    let starts = generate_starts(&theta_bounds, config, |s| {
        candidates_evaluated += 1;
        problem.value(&extend(s))
    });
    let opts = config.minimize_options();
    let outcomes: Vec<StartOutcome> = starts
        .iter()
        .map(|s| {
            let start = extend(s);
            let result = minimize(|p| problem.value_and_gradient(p), &start, &full_bounds, &opts);
            StartOutcome { start, result }
        })
        .collect();

    let mut best: Option<(usize, &MinimizeResult)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(r) = &o.result {
            if r.value.is_finite() && best.is_none_or(|(_, b)| r.value < b.value) {
                best = Some((i, r));
            }
        }
    }
    let Some((best_start, r)) = best else {
        return Err(EstimationError::AllStartsFailed { starts: outcomes.len() });
    };
    Ok(MultistartResult { x: r.x.clone(), value: r.value, best_start, outcomes: outcomes.clone(), candidates_evaluated })
}

/// Single optimizer run from `start` (search coordinates, extra coordinate included).
pub fn single_start_fit(
    problem: &DevianceProblem,
    config: &FitConfig,
    start: Vec<f64>,
) -> Result<MultistartResult, EstimationError> {
    let d = problem.d();
    config.validate(d).map_err(EstimationError::InvalidInput)?;
    let mut bounds = config.bounds_for(d);
    if let Some((b, _)) = problem.extra_bounds_and_start() {
        bounds.push(b);
    }
    if start.len() != bounds.len() {
        return Err(EstimationError::InvalidInput(format!("start needs {} coordinates", bounds.len())));
    }
    let result = minimize(|p| problem.value_and_gradient(p), &start, &bounds, &config.minimize_options());
    let outcome = StartOutcome { start, result };
    match &outcome.result {
        Ok(r) if r.value.is_finite() => Ok(MultistartResult {
            x: r.x.clone(),
            value: r.value,
            best_start: 0,
            outcomes: vec![outcome.clone()],
            candidates_evaluated: 0,
        }),
        _ => Err(EstimationError::AllStartsFailed { starts: 1 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::SearchTransform;
    use crate::kernels::Family;
    use crate::model::nugget::NuggetStrategy;
    use nalgebra::DMatrix;

    #[test]
    fn kmeans_single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3.0]];
        let (c, a) = kmeans(&pts, 1, 1);
        assert_eq!(a, vec![0, 0, 0]);
        assert!((c[0][0] - 0.5).abs() < 1e-15 && (c[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 1e-3;
            pts.push(vec![e, e]);
            pts.push(vec![10.0 + e, 10.0 - e]);
        }
        let (c, a) = kmeans(&pts, 2, 3);
        assert_ne!(a[0], a[1]);
        assert!(a.chunks(2).all(|p| p[0] == a[0] && p[1] == a[1]));
        let mut xs: Vec<f64> = c.iter().map(|v| v[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] - 0.0045).abs() < 1e-12 && (xs[1] - 10.0045).abs() < 1e-12);
    }

    #[test]
    fn one_start_is_mean_of_survivors_plus_best() {
        let bounds = vec![(-4.0, 3.0); 2];
        let config = FitConfig { n_starts: 1, ..FitConfig::default() };
        let mut seen = Vec::new();
        let starts = generate_starts(&bounds, &config, |s| {
            seen.push(s.to_vec());
            s[0] * s[0] + s[1] * s[1]
        });
        assert_eq!(seen.len(), 80);
        let mut sorted = seen.clone();
        sorted.sort_by(|a, b| (a[0] * a[0] + a[1] * a[1]).total_cmp(&(b[0] * b[0] + b[1] * b[1])));
        let survivors = &sorted[..16];
        let mean: Vec<f64> = (0..2).map(|k| survivors.iter().map(|p| p[k]).sum::<f64>() / 16.0).collect();
        assert_eq!(starts.len(), 2);
        assert!((starts[0][0] - mean[0]).abs() < 1e-12 && (starts[0][1] - mean[1]).abs() < 1e-12);
        assert_eq!(starts[1], sorted[0]);
    }

    #[test]
    fn constant_objective_uses_first_survivors() {
        let bounds = vec![(0.0, 1.0)];
        let config = FitConfig { n_starts: 1, n_lhs_candidates: Some(10), ..FitConfig::default() };
        let mut seen = Vec::new();
        let starts = generate_starts(&bounds, &config, |s| {
            seen.push(s[0]);
            1.0
        });
        // survivors are the first ceil(0.2·10) = 2 candidates
        assert!((starts[0][0] - (seen[0] + seen[1]) / 2.0).abs() < 1e-15);
        assert_eq!(starts[1][0], seen[0]);
    }

    #[test]
    fn starts_are_deterministic() {
        let bounds = vec![(-4.0, 3.0); 3];
        let config = FitConfig::default().with_seed(11);
        let f = |s: &[f64]| (s[0] - 1.0).powi(2) + s[1].sin() + s[2];
        assert_eq!(generate_starts(&bounds, &config, f), generate_starts(&bounds, &config, f));
    }

    fn wiggly_problem() -> DevianceProblem {
        let x = designs::maximin_lhs(14, 2, 8, 500);
        let y: Vec<f64> = (0..14).map(|i| (6.0 * x[(i, 0)]).sin() * (4.0 * x[(i, 1)]).cos()).collect();
        DevianceProblem::new(&x, &y, Family::GAUSSIAN, SearchTransform::Log10Theta, NuggetStrategy::Fixed(1e-8)).unwrap()
    }

    #[test]
    fn multistart_dominates_its_runs() {
        let p = wiggly_problem();
        let r = multistart_fit(&p, &FitConfig::default().with_seed(2)).unwrap();
        for o in &r.outcomes {
            if let Ok(m) = &o.result {
                assert!(r.value <= m.value);
                assert!(m.value <= m.start_value);
            }
        }
        let single = single_start_fit(&p, &FitConfig::default(), vec![2.9, 2.9]).unwrap();
        assert!(r.value <= single.value);
    }

    #[test]
    fn multistart_is_deterministic() {
        let p = wiggly_problem();
        let a = multistart_fit(&p, &FitConfig::default().with_seed(5)).unwrap();
        let b = multistart_fit(&p, &FitConfig::default().with_seed(5)).unwrap();
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn estimated_nugget_adds_a_coordinate() {
        let x = DMatrix::from_row_slice(6, 1, &[0.05, 0.2, 0.4, 0.55, 0.7, 0.95]);
        let y = [0.1, 0.5, 0.2, -0.3, 0.0, 0.4];
        let p = DevianceProblem::new(&x, &y, Family::GAUSSIAN, SearchTransform::Log10Theta, NuggetStrategy::estimated()).unwrap();
        let r = multistart_fit(&p, &FitConfig::default()).unwrap();
        assert_eq!(r.x.len(), 2);
        assert!(r.x[1] >= 1e-9f64.ln() - 1e-12 && r.x[1] <= 1e-1f64.ln() + 1e-12);
        assert!((r.outcomes[0].start[1] - 1e-6f64.ln()).abs() < 1e-12);
    }
}
