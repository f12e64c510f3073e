use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::metrics::{emrmse, pmrmse, xi_pi};
use super::profiles::FitProfile;
use crate::designs::{self, ScalingRecord, DESIGN_SWAPS, PREDICTION_SWAPS};
use crate::model::fit;
use crate::seeds::{derive, label_tag};
use crate::testbed::{lm_fit, TestFunction};

/// One profile fitted on one macroreplicate.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub function: String,
    pub d: usize,
    pub n: usize,
    pub profile: String,
    pub macrorep: usize,
    pub seed: u64,
    pub emrmse_gp: f64,
    pub emrmse_lm: f64,
    pub pmrmse_gp: f64,
    pub xi: f64,
    pub pi: f64,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
    pub warnings: usize,
    /// Why the fit or scoring failed; metrics are NaN when set.
    pub failure: Option<String>,
    /// Digest of the design, outputs, prediction set and scaling this row was scored on.
    pub input_digest: u64,
}

impl BenchResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub function: &'static TestFunction,
    pub n: usize,
    pub m: usize,
    pub profiles: Vec<FitProfile>,
    pub macroreps: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(function: &'static TestFunction, n: usize, profiles: Vec<FitProfile>, base_seed: u64) -> Self {
        Self { function, n, m: 2000, profiles, macroreps: 5, base_seed, jobs: 1 }
    }
}

/// Everything the fitters see in one macroreplicate, in scaled output units.
#[derive(Debug, Clone)]
pub struct ScoringData {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Per-point noise variances (stochastic data only).
    pub variances: Option<Vec<f64>>,
    pub x_pred: DMatrix<f64>,
    pub truth: Vec<f64>,
    pub scaling: ScalingRecord,
    pub emrmse_lm: f64,
    pub lm_rank_deficient: bool,
}

impl ScoringData {
    pub fn new(x: DMatrix<f64>, y_raw: &[f64], x_pred: DMatrix<f64>, truth_raw: &[f64]) -> Self {
        let (y, scaling) = designs::scale_outputs(y_raw);
        let truth: Vec<f64> = truth_raw.iter().map(|&t| scaling.scale(t)).collect();
        let lm = lm_fit(&x, &y);
        let emrmse_lm = emrmse(&lm.predict_rows(&x_pred), &truth).unwrap_or(f64::NAN);
        Self { x, y, variances: None, x_pred, truth, scaling, emrmse_lm, lm_rank_deficient: lm.rank_deficient }
    }

    pub fn digest(&self) -> u64 {
        let mut h = Fnv::default();
        for m in [&self.x, &self.x_pred] {
            h.usize(m.nrows());
            h.usize(m.ncols());
            m.iter().for_each(|&v| h.f64(v));
        }
        for v in [&self.y, &self.truth] {
            h.usize(v.len());
            v.iter().for_each(|&v| h.f64(v));
        }
        if let Some(v) = &self.variances {
            v.iter().for_each(|&v| h.f64(v));
        }
        h.f64(self.scaling.y_mean);
        h.f64(self.scaling.y_range);
        h.0
    }
}

#[derive(Default)]
struct Fnv(u64);

impl Fnv {
    fn bytes(&mut self, b: &[u8]) {
        if self.0 == 0 {
            self.0 = 0xcbf2_9ce4_8422_2325;
        }
        for &x in b {
            self.0 = (self.0 ^ x as u64).wrapping_mul(0x0100_0000_01b3);
        }
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.bytes(&(v as u64).to_le_bytes());
    }
}

/// Fits one profile and scores it against the truth.
pub fn score_profile(
    data: &ScoringData,
    profile: &FitProfile,
    seed: u64,
) -> (Result<(f64, f64, f64, f64), String>, f64, f64, usize) {
    let cfg = profile.config(seed, data.variances.as_deref());
    let t0 = Instant::now();
    let fitted = fit(&data.x, &data.y, profile.family, profile.parameterization, &cfg);
    let fit_seconds = t0.elapsed().as_secs_f64();
    let model = match fitted {
        Ok(m) => m,
        Err(e) => return (Err(e.to_string()), fit_seconds, 0.0, 1),
    };
    let t1 = Instant::now();
    let preds = model.predict_rows(&data.x_pred);
    let predict_seconds = t1.elapsed().as_secs_f64();
    let diag = model.diagnostics();
    let negatives = preds.iter().filter(|p| p.negative_mse).count();
    let warnings = negatives + diag.failed_starts + usize::from(diag.jitter_floor > 0.0);
    let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
    let mses: Vec<f64> = preds.iter().map(|p| p.mse).collect();
    let scored = emrmse(&means, &data.truth)
        .and_then(|e| pmrmse(&mses).map(|p| (e, p)))
        .and_then(|(e, p)| xi_pi(e, p, data.emrmse_lm).map(|(xi, pi)| (e, p, xi, pi)))
        .map_err(|e| e.to_string());
    (scored, fit_seconds, predict_seconds, warnings)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn result_row(
    function: &str,
    d: usize,
    n: usize,
    macrorep: usize,
    seed: u64,
    data: &ScoringData,
    profile: &FitProfile,
) -> BenchResult {
    let (scored, fit_seconds, predict_seconds, warnings) = score_profile(data, profile, seed);
    let (e, p, xi, pi, failure) = match scored {
        Ok((e, p, xi, pi)) => (e, p, xi, pi, None),
        Err(msg) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, Some(msg)),
    };
    BenchResult {
        function: function.to_string(),
        d,
        n,
        profile: profile.label.clone(),
        macrorep,
        seed,
        emrmse_gp: e,
        emrmse_lm: data.emrmse_lm,
        pmrmse_gp: p,
        xi,
        pi,
        fit_seconds,
        predict_seconds,
        warnings: warnings + usize::from(failure.is_some()),
        failure,
        input_digest: data.digest(),
    }
}

pub(crate) fn in_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(work)
}

pub(crate) fn sort_rows(rows: &mut [BenchResult]) {
    rows.sort_by(|a, b| {
        (&a.function, a.n, &a.profile, a.macrorep).cmp(&(&b.function, b.n, &b.profile, b.macrorep))
    });
}

pub(crate) fn check_unique_labels(profiles: &[FitProfile]) -> Result<(), String> {
    for (i, p) in profiles.iter().enumerate() {
        if profiles[..i].iter().any(|q| q.label == p.label) {
            return Err(format!("profile label {:?} appears twice", p.label));
        }
    }
    Ok(())
}

/// Design and prediction set for macroreplicate `r`.
pub fn macrorep_data(function: &TestFunction, n: usize, m: usize, base_seed: u64, r: usize) -> (u64, ScoringData) {
    let seed = derive(base_seed, &[label_tag(function.name), n as u64, r as u64]);
    let x = designs::maximin_lhs(n, function.dims, derive(seed, &[1]), DESIGN_SWAPS);
    let x_pred = designs::maximin_lhs(m, function.dims, derive(seed, &[2]), PREDICTION_SWAPS);
    let y = function.eval_rows(&x);
    let truth = function.eval_rows(&x_pred);
    (seed, ScoringData::new(x, &y, x_pred, &truth))
}

/// Macroreplicated accuracy experiment on a deterministic test function.
///
/// Rows come back sorted by function, n, profile label and macroreplicate,
/// independent of the number of worker threads.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<BenchResult>, String> {
    check_unique_labels(&spec.profiles)?;
    if let Some(p) = spec.profiles.iter().find(|p| p.is_stochastic()) {
        return Err(format!("profile {} needs replicated data", p.label));
    }
    if spec.n < 2 || spec.m < 1 {
        return Err("need n ≥ 2 design points and m ≥ 1 prediction points".into());
    }
    let f = spec.function;
    let mut rows = in_pool(spec.jobs, || {
        let data: Vec<(u64, ScoringData)> =
            (0..spec.macroreps).into_par_iter().map(|r| macrorep_data(f, spec.n, spec.m, spec.base_seed, r)).collect();
        let cells: Vec<(usize, &FitProfile)> =
            (0..spec.macroreps).flat_map(|r| spec.profiles.iter().map(move |p| (r, p))).collect();
        cells
            .into_par_iter()
            .map(|(r, p)| {
                let (seed, d) = &data[r];
                result_row(f.name, f.dims, spec.n, r, derive(*seed, &[label_tag(&p.label)]), d, p)
            })
            .collect::<Vec<_>>()
    });
    sort_rows(&mut rows);
    Ok(rows)
}
