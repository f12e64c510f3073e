//! Fitted kriging models: constant-mean GLS estimates, the best linear
//! unbiased predictor and its mean squared error.

pub mod io;
pub mod nugget;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::designs::{self, ScalingRecord};
use crate::estimation::deviance::{self, DevianceProblem};
use crate::estimation::multistart::{multistart_fit, single_start_fit, MultistartResult};
use crate::estimation::{EstimationError, FitConfig};
use crate::kernels::{Correlation, Family, KernelError, KernelSpec, Parameterization};
use crate::linalg::{self, LinalgError, SpdFactor};

pub use nugget::{NoiseScale, Nugget, NuggetStrategy};

/// Rounds of the `σ̂²` fixed-point iteration for sigma-relative noise.
const SIGMA_ROUNDS: usize = 10;
const SIGMA_RTOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("correlation matrix could not be factored even with nugget {largest_nugget:e}")]
    FactorizationFailure { largest_nugget: f64 },
}

/// `μ̂ = (1ᵀR⁻¹1)⁻¹ 1ᵀR⁻¹y`.
pub fn mu_hat(factor: &SpdFactor, y: &DVector<f64>) -> Result<f64, LinalgError> {
    check(factor, y)?;
    Ok(deviance::profile(factor, y).mu)
}

/// `σ̂² = (y − μ1)ᵀR⁻¹(y − μ1) / n`.
pub fn sigma2_hat(factor: &SpdFactor, y: &DVector<f64>, mu: f64) -> Result<f64, LinalgError> {
    check(factor, y)?;
    let z = factor.solve_lower(&y.map(|v| v - mu))?;
    Ok(z.norm_squared() / y.len() as f64)
}

fn check(factor: &SpdFactor, y: &DVector<f64>) -> Result<(), LinalgError> {
    if y.len() != factor.order() {
        return Err(LinalgError::DimensionMismatch { expected: factor.order(), got: y.len() });
    }
    Ok(())
}

/// Factors `R + diag(δ)`, walking up the jitter ladder on failure.
///
/// Returns the factor and the nugget that was actually used.
pub fn factor_with_jitter(r: &DMatrix<f64>, nugget: &Nugget) -> Result<(SpdFactor, Nugget), FitError> {
    if let Ok(f) = linalg::cholesky(&nugget.apply(r)) {
        return Ok((f, nugget.clone()));
    }
    let mut largest = nugget.largest();
    for rung in nugget::jitter_ladder(nugget) {
        largest = rung.largest();
        if let Ok(f) = linalg::cholesky(&rung.apply(r)) {
            return Ok((f, rung));
        }
    }
    Err(FitError::FactorizationFailure { largest_nugget: largest })
}

/// Prediction at one point, in original output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Clamped at zero.
    pub mse: f64,
    /// The unclamped error estimate was below `−10⁻⁸·σ̂²`.
    pub negative_mse: bool,
}

/// What the optimizer did during [`fit`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDiagnostics {
    /// Deviance at the returned parameters (`NaN` for degenerate data).
    pub deviance: f64,
    /// Optimizer coordinates of the returned parameters.
    pub search_point: Vec<f64>,
    pub iterations: usize,
    pub starts: usize,
    pub failed_starts: usize,
    pub candidates_evaluated: usize,
    /// Jitter floor the optimizer had to impose on the nugget (0 if none).
    pub jitter_floor: f64,
    /// Deviance evaluations whose factorization failed.
    pub objective_failures: usize,
    /// `σ̂²` fixed-point rounds (sigma-relative stochastic kriging only).
    pub sigma_rounds: usize,
    pub termination: String,
}

/// Fitted model; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    kernel: KernelSpec,
    correlation: Correlation,
    nugget: Nugget,
    mu_hat: f64,
    sigma2_hat: f64,
    factor: SpdFactor,
    x: DMatrix<f64>,
    y: DVector<f64>,
    alpha: DVector<f64>,
    w1: DVector<f64>,
    one_r_one: f64,
    scaling: ScalingRecord,
    degenerate: bool,
    diagnostics: FitDiagnostics,
}

/// Raw fields of a model, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts {
    pub kernel: KernelSpec,
    pub theta: Vec<f64>,
    pub nugget: Nugget,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub lower: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    pub scaling: ScalingRecord,
    pub degenerate: bool,
}

impl GpModel {
    /// Model at fixed hyperparameters; `y` is in scaled units.
    pub fn assemble(
        kernel: KernelSpec,
        nugget: Nugget,
        x: &DMatrix<f64>,
        y: &[f64],
        scaling: ScalingRecord,
    ) -> Result<Self, FitError> {
        let correlation = kernel.correlation_fn()?;
        validate_data(x, y, kernel.dims())?;
        let r = correlation.matrix(x);
        let (factor, nugget) = factor_with_jitter(&r, &nugget)?;
        let y = DVector::from_column_slice(y);
        let p = deviance::profile(&factor, &y);
        let alpha = factor.solve_upper(&p.z)?;
        let one_r_one = p.w1.norm_squared();
        Ok(Self {
            kernel,
            correlation,
            nugget,
            mu_hat: p.mu,
            sigma2_hat: p.q / y.len() as f64,
            factor,
            x: x.clone(),
            y,
            alpha,
            w1: p.w1,
            one_r_one,
            scaling,
            degenerate: false,
            diagnostics: FitDiagnostics::default(),
        })
    }

    /// Mean-only model for constant outputs: predicts the constant with zero error.
    fn constant(kernel: KernelSpec, x: &DMatrix<f64>, y: &[f64], scaling: ScalingRecord) -> Result<Self, FitError> {
        let n = x.nrows();
        let correlation = kernel.correlation_fn()?;
        let factor = SpdFactor::from_lower(DMatrix::identity(n, n))?;
        let y = DVector::from_column_slice(y);
        Ok(Self {
            kernel,
            correlation,
            nugget: Nugget::Scalar(0.0),
            mu_hat: 0.0,
            sigma2_hat: 0.0,
            factor,
            x: x.clone(),
            y,
            alpha: DVector::zeros(n),
            w1: DVector::from_element(n, 1.0),
            one_r_one: n as f64,
            scaling,
            degenerate: true,
            diagnostics: FitDiagnostics { deviance: f64::NAN, ..FitDiagnostics::default() },
        })
    }

    /// Rebuilds a model from stored fields (see [`io`]).
    pub fn from_parts(parts: ModelParts) -> Result<Self, FitError> {
        let n = parts.x.nrows();
        if parts.y.len() != n || parts.alpha.len() != n || parts.lower.nrows() != n {
            return Err(FitError::InvalidInput("stored arrays disagree on n".into()));
        }
        if parts.theta.len() != parts.x.ncols() {
            return Err(FitError::InvalidInput("stored theta disagrees on d".into()));
        }
        let correlation = Correlation::new(parts.kernel.family(), parts.theta)?;
        let factor = SpdFactor::from_lower(parts.lower)?;
        let w1 = factor.solve_lower(&DVector::from_element(n, 1.0))?;
        let one_r_one = w1.norm_squared();
        Ok(Self {
            kernel: parts.kernel,
            correlation,
            nugget: parts.nugget,
            mu_hat: parts.mu_hat,
            sigma2_hat: parts.sigma2_hat,
            factor,
            x: parts.x,
            y: DVector::from_vec(parts.y),
            alpha: DVector::from_vec(parts.alpha),
            w1,
            one_r_one,
            scaling: parts.scaling,
            degenerate: parts.degenerate,
            diagnostics: FitDiagnostics::default(),
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Canonical `θ` used for predictions.
    pub fn theta(&self) -> &[f64] {
        self.correlation.theta()
    }

    pub fn nugget(&self) -> &Nugget {
        &self.nugget
    }

    /// `μ̂` in scaled units.
    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    /// `σ̂²` in scaled units.
    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Training outputs in scaled units.
    pub fn y_scaled(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn scaling(&self) -> &ScalingRecord {
        &self.scaling
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// `1ᵀR_δ⁻¹1`.
    pub fn one_r_one(&self) -> f64 {
        self.one_r_one
    }

    /// Mean and error estimate in scaled units, plus the unclamped MSE.
    pub fn predict_scaled(&self, point: &[f64]) -> (f64, f64, f64) {
        assert_eq!(point.len(), self.d(), "prediction point has the wrong dimension");
        let r = self.correlation.cross(&self.x, point);
        let mean = self.mu_hat + r.dot(&self.alpha);
        let u = self.factor.solve_lower(&r).expect("dimensions checked");
        let lead = 1.0 - self.w1.dot(&u);
        let raw = self.sigma2_hat * (1.0 - u.norm_squared() + lead * lead / self.one_r_one);
        (mean, raw.max(0.0), raw)
    }

    pub fn predict(&self, point: &[f64]) -> Prediction {
        let (mean, mse, raw) = self.predict_scaled(point);
        Prediction {
            mean: self.scaling.unscale(mean),
            mse: self.scaling.unscale_variance(mse),
            negative_mse: raw < -1e-8 * self.sigma2_hat,
        }
    }

    /// BLUP in original output units.
    pub fn predict_mean(&self, point: &[f64]) -> f64 {
        let r = self.correlation.cross(&self.x, point);
        self.scaling.unscale(self.mu_hat + r.dot(&self.alpha))
    }

    /// Mean squared error in original output units², clamped at zero.
    pub fn predict_mse(&self, point: &[f64]) -> f64 {
        self.predict(point).mse
    }

    /// Predictions at every row of `points`.
    pub fn predict_rows(&self, points: &DMatrix<f64>) -> Vec<Prediction> {
        let mut row = vec![0.0; points.ncols()];
        (0..points.nrows())
            .map(|i| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = points[(i, k)];
                }
                self.predict(&row)
            })
            .collect()
    }
}

fn validate_data(x: &DMatrix<f64>, y: &[f64], d: usize) -> Result<(), FitError> {
    let (n, cols) = x.shape();
    if cols != d {
        return Err(FitError::InvalidInput(format!("design has {cols} columns, kernel expects {d}")));
    }
    if y.len() != n {
        return Err(FitError::InvalidInput(format!("design has {n} rows but there are {} outputs", y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::InvalidInput("data contain NaN or infinite values".into()));
    }
    Ok(())
}

/// Fits a constant-mean kriging model by maximum likelihood.
///
/// Outputs are scaled to mean 0 and range 1 internally; predictions come
/// back in the original units. Stochastic-kriging variances in `config` are
/// given in original output units².
pub fn fit(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    parameterization: Parameterization,
    config: &FitConfig,
) -> Result<GpModel, FitError> {
    fit_impl(x, y, family, parameterization, config, None)
}

/// Like [`fit`], but one optimizer run started from `start` instead of the
/// multistart search. The start's parameterization is kept for the result.
pub fn fit_from(x: &DMatrix<f64>, y: &[f64], start: &KernelSpec, config: &FitConfig) -> Result<GpModel, FitError> {
    let theta = start.to_canonical_theta()?;
    fit_impl(x, y, start.family(), start.parameterization(), config, Some(theta))
}

fn fit_impl(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    parameterization: Parameterization,
    config: &FitConfig,
    start_theta: Option<Vec<f64>>,
) -> Result<GpModel, FitError> {
    let (n, d) = x.shape();
    if d == 0 {
        return Err(FitError::InvalidInput("design needs at least one column".into()));
    }
    if n < 2 {
        return Err(FitError::InvalidInput("at least two design points are required".into()));
    }
    validate_data(x, y, d)?;
    config.validate(d).map_err(FitError::InvalidInput)?;
    config.nugget.validate(n).map_err(FitError::InvalidInput)?;
    let family = family.validate()?;

    let (ys, scaling) = designs::scale_outputs(y);
    if scaling.degenerate {
        let mid: Vec<f64> = config
            .bounds_for(d)
            .iter()
            .map(|(lo, hi)| config.search_transform.to_theta(0.5 * (lo + hi)))
            .collect();
        let kernel = KernelSpec::from_theta(family, parameterization, &mid)?;
        return GpModel::constant(kernel, x, &ys, scaling);
    }

    let strategy = match &config.nugget {
        NuggetStrategy::PerPoint { variances, scale } => NuggetStrategy::PerPoint {
            variances: variances.iter().map(|&v| scaling.scale_variance(v)).collect(),
            scale: *scale,
        },
        other => other.clone(),
    };
    let sigma_relative = matches!(strategy, NuggetStrategy::PerPoint { scale: NoiseScale::SigmaRelative, .. });
    let base = DevianceProblem::new(x, &ys, family, config.search_transform, strategy).map_err(FitError::from)?;

    let start = start_theta.map(|theta| {
        let mut s: Vec<f64> = theta.iter().map(|&t| config.search_transform.from_theta(t)).collect();
        if let Some((_, e)) = base.extra_bounds_and_start() {
            s.push(e);
        }
        s
    });

    let mut sigma2_ref = if sigma_relative { sample_variance(&ys).max(f64::EPSILON) } else { 1.0 };
    let mut rounds = 0;
    let (problem, result) = loop {
        rounds += 1;
        let (problem, result) = optimize_with_floor(&base.clone().with_sigma2_ref(sigma2_ref), config, start.clone())?;
        if !sigma_relative || rounds >= SIGMA_ROUNDS {
            break (problem, result);
        }
        let next = problem.evaluate(&result.x, false).sigma2_hat;
        let converged = (next - sigma2_ref).abs() <= SIGMA_RTOL * sigma2_ref;
        if !(next > 0.0) || converged {
            break (problem, result);
        }
        sigma2_ref = next;
    };

    let theta = problem.theta_of(&result.x);
    let r = problem.correlation_matrix(&theta);
    let nugget = problem
        .nugget_at(&result.x, &r)
        .ok_or(FitError::Linalg(LinalgError::NoConvergence))?;
    let kernel = KernelSpec::from_theta(family, parameterization, &theta)?;
    let mut model = GpModel::assemble(kernel, nugget, x, &ys, scaling)?;
    let best = result.outcomes[result.best_start].result.as_ref().ok();
    model.diagnostics = FitDiagnostics {
        deviance: result.value,
        search_point: result.x.clone(),
        iterations: result.total_iterations(),
        starts: result.outcomes.len(),
        failed_starts: result.failed_starts(),
        candidates_evaluated: result.candidates_evaluated,
        jitter_floor: problem.jitter_floor(),
        objective_failures: problem.failures(),
        sigma_rounds: if sigma_relative { rounds } else { 0 },
        termination: best.map(|b| b.termination.name().to_string()).unwrap_or_default(),
    };
    Ok(model)
}

/// Runs the optimizer; if every start fails, retries with the nugget floored
/// at successive rungs of the jitter ladder.
fn optimize_with_floor(
    problem: &DevianceProblem,
    config: &FitConfig,
    start: Option<Vec<f64>>,
) -> Result<(DevianceProblem, MultistartResult), FitError> {
    let run = |p: &DevianceProblem| match &start {
        Some(s) => single_start_fit(p, config, s.clone()),
        None => multistart_fit(p, config),
    };
    let mut last = match run(problem) {
        Ok(r) => return Ok((problem.clone(), r)),
        Err(e @ EstimationError::InvalidInput(_)) => return Err(e.into()),
        Err(e) => e,
    };
    for rung in nugget::jitter_ladder(&Nugget::Scalar(0.0)) {
        let floored = problem.clone().with_jitter_floor(rung.largest());
        match run(&floored) {
            Ok(r) => return Ok((floored, r)),
            Err(e) => last = e,
        }
    }
    Err(last.into())
}

fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_factor(n: usize) -> SpdFactor {
        linalg::cholesky(&DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn mu_hat_examples() {
        let f = identity_factor(3);
        assert_relative_eq!(mu_hat(&f, &DVector::from_vec(vec![3.0, 3.0, 3.0])).unwrap(), 3.0);
        assert_relative_eq!(mu_hat(&f, &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap(), 2.0);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let f2 = linalg::cholesky(&r).unwrap();
        assert_relative_eq!(mu_hat(&f2, &DVector::from_vec(vec![0.0, 4.0])).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sigma2_hat_examples() {
        let f = identity_factor(2);
        assert_eq!(sigma2_hat(&f, &DVector::from_vec(vec![5.0, 5.0]), 5.0).unwrap(), 0.0);
        assert_relative_eq!(sigma2_hat(&f, &DVector::from_vec(vec![1.0, -1.0]), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sigma2_hat_matches_explicit_inverse() {
        let x = designs::maximin_lhs(6, 2, 3, 100);
        let r = Correlation::new(Family::GAUSSIAN, vec![2.0, 5.0]).unwrap().matrix(&x);
        let f = linalg::cholesky(&r).unwrap();
        let y = DVector::from_fn(6, |i, _| (i as f64).sin());
        let mu = mu_hat(&f, &y).unwrap();
        let res = y.map(|v| v - mu);
        let naive = (res.transpose() * r.try_inverse().unwrap() * &res)[0] / 6.0;
        assert_relative_eq!(sigma2_hat(&f, &y, mu).unwrap(), naive, max_relative = 1e-10);
    }

    #[test]
    fn ladder_recovers_duplicate_rows() {
        let r = DMatrix::from_element(2, 2, 1.0);
        let (f, used) = factor_with_jitter(&r, &Nugget::Scalar(0.0)).unwrap();
        assert!(used.largest() >= 1e-12 && used.largest() <= 1e-4);
        assert!(f.logdet().is_finite());
    }

    #[test]
    fn far_away_prediction_reverts_to_mean() {
        let x = DMatrix::from_row_slice(3, 1, &[0.1, 0.5, 0.9]);
        let kernel = KernelSpec::new(Family::GAUSSIAN, Parameterization::Theta, vec![10.0]).unwrap();
        let m = GpModel::assemble(kernel, Nugget::Scalar(0.0), &x, &[0.3, -0.2, 0.1], ScalingRecord::IDENTITY).unwrap();
        let p = m.predict(&[100.0]);
        assert_relative_eq!(p.mean, m.mu_hat(), epsilon = 1e-15);
        assert_relative_eq!(p.mse, m.sigma2_hat() * (1.0 + 1.0 / m.one_r_one()), max_relative = 1e-12);
    }

    #[test]
    fn constant_outputs_give_mean_only_model() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 0.3, 0.6, 0.9]);
        let m = fit(&x, &[7.0; 4], Family::GAUSSIAN, Parameterization::Theta, &FitConfig::default()).unwrap();
        assert!(m.is_degenerate());
        for p in [0.1, 0.45, 5.0] {
            assert_eq!(m.predict_mean(&[p]), 7.0);
            assert!(m.predict_mse(&[p]) >= 0.0);
        }
    }

    #[test]
    fn six_point_interpolation() {
        let x = DMatrix::from_row_slice(6, 1, &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        let y: Vec<f64> = x.iter().map(|t| (2.0 * std::f64::consts::PI * t).sin() + 0.5 * t).collect();
        let m = fit(&x, &y, Family::GAUSSIAN, Parameterization::Log10Theta, &FitConfig::default()).unwrap();
        for (i, yi) in y.iter().enumerate() {
            let p = m.predict(&[x[(i, 0)]]);
            assert!((p.mean - yi).abs() < 1e-6, "row {i}: {} vs {yi}", p.mean);
            assert!(p.mse < 1e-6 * m.scaling().unscale_variance(m.sigma2_hat()));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = DMatrix::from_row_slice(1, 1, &[0.5]);
        assert!(matches!(fit(&x, &[1.0], Family::GAUSSIAN, Parameterization::Theta, &FitConfig::default()), Err(FitError::InvalidInput(_))));
        let x = DMatrix::from_row_slice(2, 1, &[0.5, f64::NAN]);
        assert!(fit(&x, &[1.0, 2.0], Family::GAUSSIAN, Parameterization::Theta, &FitConfig::default()).is_err());
    }
}
