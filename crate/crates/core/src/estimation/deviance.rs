//! Profile deviance `log|R_δ| + n·log Q` and its analytic gradient, where
//! `Q = (y − μ̂1)ᵀR_δ⁻¹(y − μ̂1)` and `μ̂` is the generalized-least-squares mean.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::kernels::Family;
use crate::linalg::{self, SpdFactor};
use crate::model::nugget::{self, NoiseScale, Nugget, NuggetStrategy};

use super::{EstimationError, SearchTransform};

/// Result of one objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `+∞` when `R_δ` could not be factored.
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub mu_hat: f64,
    /// Profile `Q/n`.
    pub sigma2_hat: f64,
    /// The residual term hit its floor `ε·‖y‖²`.
    pub floored: bool,
}

impl Evaluation {
    fn failed(dim: usize, gradient: bool) -> Self {
        Self {
            value: f64::INFINITY,
            gradient: gradient.then(|| vec![0.0; dim]),
            mu_hat: f64::NAN,
            sigma2_hat: f64::NAN,
            floored: false,
        }
    }
}

/// Extra search coordinate appended after the `d` correlation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtraCoordinate {
    /// `ln δ` of an estimated scalar nugget.
    LogNugget,
    /// `ln c` of the stochastic-kriging noise scale.
    LogNoiseScale,
}

/// Deviance of one data set as a function of the search coordinates.
///
/// Pairwise distance terms are cached once, so each evaluation costs one
/// matrix assembly plus a Cholesky factorization (and an inverse when the
/// gradient is requested).
#[derive(Debug)]
pub struct DevianceProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    family: Family,
    transform: SearchTransform,
    nugget: NuggetStrategy,
    extra: Option<ExtraCoordinate>,
    sigma2_ref: f64,
    jitter_floor: f64,
    /// `distance_term(x_ik − x_jk)` for `i > j`, row-major in `(pair, k)`.
    terms: Vec<f64>,
    residual_floor: f64,
    failures: AtomicUsize,
}

impl Clone for DevianceProblem {
    fn clone(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.clone(),
            family: self.family,
            transform: self.transform,
            nugget: self.nugget.clone(),
            extra: self.extra,
            sigma2_ref: self.sigma2_ref,
            jitter_floor: self.jitter_floor,
            terms: self.terms.clone(),
            residual_floor: self.residual_floor,
            failures: AtomicUsize::new(self.failures.load(Ordering::Relaxed)),
        }
    }
}

impl DevianceProblem {
    /// `y` is taken as given (the model layer scales it beforehand).
    pub fn new(
        x: &DMatrix<f64>,
        y: &[f64],
        family: Family,
        transform: SearchTransform,
        nugget: NuggetStrategy,
    ) -> Result<Self, EstimationError> {
        let (n, d) = x.shape();
        let family = family.validate().map_err(|e| EstimationError::InvalidInput(e.to_string()))?;
        if n == 0 || d == 0 {
            return Err(EstimationError::InvalidInput("design must have at least one row and column".into()));
        }
        if y.len() != n {
            return Err(EstimationError::InvalidInput(format!("expected {n} outputs, got {}", y.len())));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(EstimationError::InvalidInput("inputs and outputs must be finite".into()));
        }
        nugget.validate(n).map_err(EstimationError::InvalidInput)?;
        let extra = match &nugget {
            NuggetStrategy::Estimated { .. } => Some(ExtraCoordinate::LogNugget),
            NuggetStrategy::PerPoint { scale: NoiseScale::Joint { .. }, .. } => Some(ExtraCoordinate::LogNoiseScale),
            _ => None,
        };
        let mut terms = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for i in 0..n {
            for j in 0..i {
                for k in 0..d {
                    terms.push(family.distance_term(x[(i, k)] - x[(j, k)]));
                }
            }
        }
        let y = DVector::from_column_slice(y);
        let residual_floor = (f64::EPSILON * y.norm_squared()).max(f64::MIN_POSITIVE);
        Ok(Self {
            x: x.clone(),
            y,
            family,
            transform,
            nugget,
            extra,
            sigma2_ref: 1.0,
            jitter_floor: 0.0,
            terms,
            residual_floor,
            failures: AtomicUsize::new(0),
        })
    }

    /// Reference `σ̂²` used by the sigma-relative stochastic-kriging nugget.
    pub fn with_sigma2_ref(mut self, sigma2: f64) -> Self {
        self.sigma2_ref = sigma2;
        self
    }

    /// Lower limit applied to every realized nugget entry.
    pub fn with_jitter_floor(mut self, floor: f64) -> Self {
        self.jitter_floor = floor;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Number of search coordinates.
    pub fn dim(&self) -> usize {
        self.d() + usize::from(self.extra.is_some())
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn transform(&self) -> SearchTransform {
        self.transform
    }

    pub fn nugget_strategy(&self) -> &NuggetStrategy {
        &self.nugget
    }

    pub fn extra(&self) -> Option<ExtraCoordinate> {
        self.extra
    }

    pub fn jitter_floor(&self) -> f64 {
        self.jitter_floor
    }

    /// Bounds and start of the extra coordinate, if any.
    pub fn extra_bounds_and_start(&self) -> Option<((f64, f64), f64)> {
        match (&self.extra, &self.nugget) {
            (Some(ExtraCoordinate::LogNugget), NuggetStrategy::Estimated { start }) => {
                let (lo, hi) = nugget::NUGGET_BOUNDS;
                Some(((lo.ln(), hi.ln()), start.clamp(lo, hi).ln()))
            }
            (Some(ExtraCoordinate::LogNoiseScale), NuggetStrategy::PerPoint { scale: NoiseScale::Joint { start }, .. }) => {
                let (lo, hi) = nugget::NOISE_SCALE_BOUNDS;
                Some(((lo.ln(), hi.ln()), start.clamp(lo, hi).ln()))
            }
            _ => None,
        }
    }

    /// Objective evaluations whose factorization failed so far.
    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }

    pub fn theta_of(&self, s: &[f64]) -> Vec<f64> {
        s[..self.d()].iter().map(|&v| self.transform.to_theta(v)).collect()
    }

    /// `R(θ)` from the cached distance terms.
    pub fn correlation_matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut r = DMatrix::<f64>::identity(n, n);
        for (i, j, w) in self.weighted_sums(theta) {
            let v = self.family.from_weighted_sum(w);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
        r
    }

    fn weighted_sums<'a>(&'a self, theta: &'a [f64]) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
        let d = self.d();
        let n = self.n();
        (0..n).flat_map(move |i| (0..i).map(move |j| (i, j))).zip(self.terms.chunks_exact(d.max(1))).map(
            move |((i, j), t)| {
                let w: f64 = t.iter().zip(theta).map(|(a, b)| a * b).sum();
                (i, j, w)
            },
        )
    }

    /// Nugget realized at search point `s` for correlation matrix `r`.
    pub fn nugget_at(&self, s: &[f64], r: &DMatrix<f64>) -> Option<Nugget> {
        let iterate = match self.extra {
            Some(_) => Some(s[self.d()].exp()),
            None => match &self.nugget {
                NuggetStrategy::PerPoint { scale: NoiseScale::SigmaRelative, .. } => Some(self.sigma2_ref),
                _ => None,
            },
        };
        let realized = nugget::realize_nugget(&self.nugget, r, iterate).ok()?;
        Some(if self.jitter_floor > 0.0 { realized.with_floor(self.jitter_floor) } else { realized })
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.evaluate(s, false).value
    }

    pub fn value_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        let e = self.evaluate(s, true);
        (e.value, e.gradient.unwrap_or_default())
    }

    pub fn evaluate(&self, s: &[f64], want_gradient: bool) -> Evaluation {
        assert_eq!(s.len(), self.dim(), "search vector has the wrong length");
        let (n, d) = (self.n(), self.d());
        let theta = self.theta_of(s);
        if theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || s.iter().any(|v| !v.is_finite()) {
            return Evaluation::failed(self.dim(), want_gradient);
        }
        let r = self.correlation_matrix(&theta);
        let Some(nug) = self.nugget_at(s, &r) else {
            self.failures.fetch_add(1, Ordering::Relaxed);
            return Evaluation::failed(self.dim(), want_gradient);
        };
        let r_delta = nug.apply(&r);
        let factor = match linalg::cholesky(&r_delta) {
            Ok(f) => f,
            Err(_) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                return Evaluation::failed(self.dim(), want_gradient);
            }
        };
        let parts = profile(&factor, &self.y);
        let floored = parts.q < self.residual_floor;
        let q = parts.q.max(self.residual_floor);
        let value = factor.logdet() + n as f64 * q.ln();
        let mut eval = Evaluation { value, gradient: None, mu_hat: parts.mu, sigma2_hat: q / n as f64, floored };
        if !want_gradient {
            return eval;
        }

        // W = R⁻¹ − (n/Q)ααᵀ; ∂D/∂φ = Σ_ij W_ij ∂R_ij/∂φ
        let mut w = factor.inverse();
        if !floored {
            let alpha = factor.solve_upper(&parts.z).expect("dimensions checked");
            w.ger(-(n as f64) / q, &alpha, &alpha, 1.0);
        }
        let mut grad = vec![0.0; self.dim()];
        for ((i, j, ws), t) in self.weighted_sums(&theta).zip(self.terms.chunks_exact(d)) {
            let corr = r[(i, j)];
            let common = 2.0 * w[(i, j)] * self.family.derivative_factor(ws, corr);
            if common == 0.0 {
                continue;
            }
            for (g, tk) in grad[..d].iter_mut().zip(t) {
                *g += common * tk;
            }
        }
        for (k, g) in grad[..d].iter_mut().enumerate() {
            *g *= self.transform.derivative(s[k]);
        }
        match self.extra {
            Some(ExtraCoordinate::LogNugget) => {
                let delta = s[d].exp();
                // a jitter floor above δ freezes the coordinate
                if delta >= self.jitter_floor {
                    grad[d] = delta * w.diagonal().sum();
                }
            }
            Some(ExtraCoordinate::LogNoiseScale) => {
                if let NuggetStrategy::PerPoint { variances, .. } = &self.nugget {
                    let c = s[d].exp();
                    grad[d] = (0..n)
                        .filter(|&i| c * variances[i] >= self.jitter_floor)
                        .map(|i| c * variances[i] * w[(i, i)])
                        .sum();
                }
            }
            None => {}
        }
        eval.gradient = Some(grad);
        eval
    }
}

/// GLS pieces shared by the deviance and the fitted model.
pub(crate) struct Profile {
    pub mu: f64,
    /// `L⁻¹(y − μ̂1)`
    pub z: DVector<f64>,
    /// `L⁻¹1`
    pub w1: DVector<f64>,
    pub q: f64,
}

pub(crate) fn profile(factor: &SpdFactor, y: &DVector<f64>) -> Profile {
    let n = factor.order();
    let w1 = factor.solve_lower(&DVector::from_element(n, 1.0)).expect("dimensions checked");
    let wy = factor.solve_lower(y).expect("dimensions checked");
    let mu = w1.dot(&wy) / w1.dot(&w1);
    let z = &wy - &w1 * mu;
    let q = z.norm_squared();
    Profile { mu, z, w1, q }
}
