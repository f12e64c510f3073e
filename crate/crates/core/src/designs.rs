//! Space-filling designs and output scaling.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::seeds;

/// Default number of point-exchange swaps for design points.
pub const DESIGN_SWAPS: usize = 10_000;
/// Default number of swaps for (large) prediction sets.
pub const PREDICTION_SWAPS: usize = 1_000;

/// Random Latin hypercube: column `k` holds a permutation of the `n` strata,
/// each value jittered uniformly inside its cell.
pub fn random_lhs(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeds::rng(seed);
    lhs_with(&mut rng, n, d)
}

fn lhs_with(rng: &mut seeds::Rng, n: usize, d: usize) -> DMatrix<f64> {
    let mut x = DMatrix::<f64>::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..d {
        perm.shuffle(rng);
        for (i, &cell) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            // keep strictly inside the cell
            let u = u.clamp(1e-12, 1.0 - 1e-12);
            x[(i, k)] = (cell as f64 + u) / n as f64;
        }
    }
    x
}

/// Maximin Latin hypercube in `[0,1]^d`.
///
/// Starts from [`random_lhs`] with the same seed and runs `iters` proposed
/// point exchanges (swap two rows within one column, which preserves the
/// stratification). A swap is kept only if the minimum pairwise distance does
/// not drop; ties are broken by the sum of nearest-neighbour distances.
pub fn maximin_lhs(n: usize, d: usize, seed: u64, iters: usize) -> DMatrix<f64> {
    let mut rng = seeds::rng(seed);
    let mut x = lhs_with(&mut rng, n, d);
    if n < 2 || d == 0 || iters == 0 {
        return x;
    }
    let mut state = NearestNeighbours::new(&x);
    let mut rows = Rows::from(&x);
    for _ in 0..iters {
        let a = if rng.random_bool(0.5) { state.critical_point() } else { rng.random_range(0..n) };
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let k = rng.random_range(0..d);
        let before = state.objective();
        let saved = state.clone();
        rows.swap(a, b, k);
        state.update_after_change(&rows, a, b);
        let after = state.objective();
        if after.0 > before.0 || (after.0 == before.0 && after.1 >= before.1) {
            debug_assert!(after.0 >= before.0);
            continue;
        }
        rows.swap(a, b, k);
        state = saved;
    }
    for i in 0..n {
        for k in 0..d {
            x[(i, k)] = rows.get(i, k);
        }
    }
    x
}

/// Row-major copy of the design for cache-friendly distance loops.
struct Rows {
    data: Vec<f64>,
    d: usize,
}

impl Rows {
    fn from(x: &DMatrix<f64>) -> Self {
        let (n, d) = x.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Self { data, d }
    }

    fn n(&self) -> usize {
        self.data.len() / self.d
    }

    fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.d + k]
    }

    fn swap(&mut self, a: usize, b: usize, k: usize) {
        self.data.swap(a * self.d + k, b * self.d + k);
    }

    fn dist2(&self, i: usize, j: usize) -> f64 {
        let (ri, rj) = (&self.data[i * self.d..(i + 1) * self.d], &self.data[j * self.d..(j + 1) * self.d]);
        ri.iter().zip(rj).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

#[derive(Clone)]
struct NearestNeighbours {
    dist2: Vec<f64>,
    index: Vec<usize>,
}

impl NearestNeighbours {
    fn new(x: &DMatrix<f64>) -> Self {
        let rows = Rows::from(x);
        let n = rows.n();
        let mut s = Self { dist2: vec![f64::INFINITY; n], index: vec![0; n] };
        for i in 0..n {
            s.recompute(&rows, i);
        }
        s
    }

    fn recompute(&mut self, rows: &Rows, i: usize) {
        let mut best = (f64::INFINITY, 0);
        for j in 0..rows.n() {
            if j != i {
                let v = rows.dist2(i, j);
                if v < best.0 {
                    best = (v, j);
                }
            }
        }
        self.dist2[i] = best.0;
        self.index[i] = best.1;
    }

    fn update_after_change(&mut self, rows: &Rows, a: usize, b: usize) {
        self.recompute(rows, a);
        self.recompute(rows, b);
        for l in 0..rows.n() {
            if l == a || l == b {
                continue;
            }
            if self.index[l] == a || self.index[l] == b {
                self.recompute(rows, l);
                continue;
            }
            for m in [a, b] {
                let v = rows.dist2(l, m);
                if v < self.dist2[l] {
                    self.dist2[l] = v;
                    self.index[l] = m;
                }
            }
        }
    }

    fn critical_point(&self) -> usize {
        self.dist2
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// (minimum squared distance, sum of nearest-neighbour distances)
    fn objective(&self) -> (f64, f64) {
        let min = self.dist2.iter().copied().fold(f64::INFINITY, f64::min);
        (min, self.dist2.iter().map(|v| v.sqrt()).sum())
    }
}

/// Smallest pairwise Euclidean distance between rows (`∞` for fewer than two rows).
pub fn min_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let rows = Rows::from(x);
    let n = rows.n();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..i {
            best = best.min(rows.dist2(i, j));
        }
    }
    best.sqrt()
}

/// Mean/range standardization of outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRecord {
    pub y_mean: f64,
    pub y_range: f64,
    /// The input had zero range; `y_range` was set to 1.
    pub degenerate: bool,
}

impl ScalingRecord {
    pub const IDENTITY: ScalingRecord = ScalingRecord { y_mean: 0.0, y_range: 1.0, degenerate: false };

    pub fn scale(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_range
    }

    pub fn unscale(&self, y: f64) -> f64 {
        y * self.y_range + self.y_mean
    }

    pub fn unscale_variance(&self, v: f64) -> f64 {
        v * self.y_range * self.y_range
    }

    pub fn scale_variance(&self, v: f64) -> f64 {
        v / (self.y_range * self.y_range)
    }
}

/// Scales `y` to mean 0 and range 1.
pub fn scale_outputs(y: &[f64]) -> (Vec<f64>, ScalingRecord) {
    if y.is_empty() {
        return (Vec::new(), ScalingRecord::IDENTITY);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let record = if range > 0.0 {
        ScalingRecord { y_mean: mean, y_range: range, degenerate: false }
    } else {
        ScalingRecord { y_mean: mean, y_range: 1.0, degenerate: true }
    };
    (y.iter().map(|&v| record.scale(v)).collect(), record)
}
