//! Maximum-likelihood estimation of the correlation parameters.
//!
//! The objective is the profile deviance ([`deviance`]); it is minimized by a
//! bounded limited-memory quasi-Newton method ([`lbfgsb`]) restarted from
//! clustered space-filling starts ([`multistart`]).

pub mod deviance;
pub mod lbfgsb;
pub mod multistart;

use thiserror::Error;

use crate::model::nugget::NuggetStrategy;

pub use deviance::{DevianceProblem, Evaluation, ExtraCoordinate};
pub use lbfgsb::{minimize, MinimizeOptions, MinimizeResult, OptimizeError, Termination};
pub use multistart::{generate_starts, kmeans, multistart_fit, MultistartResult, StartOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("all {starts} optimizer starts produced a non-finite deviance")]
    AllStartsFailed { starts: usize },
}

/// `θ` bounds used when none are configured (generous DACE-style box).
pub const THETA_BOUNDS: (f64, f64) = (1e-4, 1e3);

/// Coordinates the optimizer works in; `θ` is recovered per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchTransform {
    #[default]
    Log10Theta,
    LogTheta,
    Raw,
}

impl SearchTransform {
    pub fn to_theta(self, s: f64) -> f64 {
        match self {
            SearchTransform::Log10Theta => 10f64.powf(s),
            SearchTransform::LogTheta => s.exp(),
            SearchTransform::Raw => s,
        }
    }

    pub fn from_theta(self, theta: f64) -> f64 {
        match self {
            SearchTransform::Log10Theta => theta.log10(),
            SearchTransform::LogTheta => theta.ln(),
            SearchTransform::Raw => theta,
        }
    }

    /// `dθ/ds` at `s`.
    pub fn derivative(self, s: f64) -> f64 {
        match self {
            SearchTransform::Log10Theta => 10f64.powf(s) * std::f64::consts::LN_10,
            SearchTransform::LogTheta => s.exp(),
            SearchTransform::Raw => 1.0,
        }
    }
}

/// Per-dimension `[lo, hi]` in search coordinates.
pub type Bounds = Vec<(f64, f64)>;

/// `[10⁻⁴, 10³]` in `θ`, mapped through `transform`, one pair per column of `x`.
pub fn default_bounds(d: usize, transform: SearchTransform) -> Bounds {
    let (lo, hi) = THETA_BOUNDS;
    vec![(transform.from_theta(lo), transform.from_theta(hi)); d]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub search_transform: SearchTransform,
    /// `θ` bounds in search coordinates; `None` uses [`default_bounds`].
    pub bounds: Option<Bounds>,
    pub n_starts: usize,
    /// Space-filling candidates scored before clustering; `None` means `40·d`.
    pub n_lhs_candidates: Option<usize>,
    /// `None` means `n_starts`.
    pub n_clusters: Option<usize>,
    /// Fraction of candidates (lowest deviance first) kept for clustering.
    pub survivor_fraction: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Relative decrease of the objective below which a run stops.
    pub value_tol: f64,
    pub nugget: NuggetStrategy,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            search_transform: SearchTransform::Log10Theta,
            bounds: None,
            n_starts: 5,
            n_lhs_candidates: None,
            n_clusters: None,
            survivor_fraction: 0.2,
            max_iters: 200,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            value_tol: 1e-12,
            nugget: NuggetStrategy::Fixed(0.0),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_nugget(mut self, nugget: NuggetStrategy) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn bounds_for(&self, d: usize) -> Bounds {
        self.bounds.clone().unwrap_or_else(|| default_bounds(d, self.search_transform))
    }

    pub fn candidates_for(&self, d: usize) -> usize {
        self.n_lhs_candidates.unwrap_or(40 * d).max(1)
    }

    pub fn clusters(&self) -> usize {
        self.n_clusters.unwrap_or(self.n_starts).max(1)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step_tol: self.step_tol,
            value_tol: self.value_tol,
            ..MinimizeOptions::default()
        }
    }

    pub fn validate(&self, d: usize) -> Result<(), String> {
        if self.n_starts == 0 {
            return Err("n_starts must be >= 1".into());
        }
        if self.clusters() > self.candidates_for(d) {
            return Err("n_clusters must not exceed n_lhs_candidates".into());
        }
        if !(self.survivor_fraction > 0.0 && self.survivor_fraction <= 1.0) {
            return Err("survivor_fraction must lie in (0, 1]".into());
        }
        let bounds = self.bounds_for(d);
        if bounds.len() != d {
            return Err(format!("expected {d} bound pairs, got {}", bounds.len()));
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err("every bound pair needs finite lo < hi".into());
        }
        if self.search_transform == SearchTransform::Raw && bounds.iter().any(|(lo, _)| *lo <= 0.0) {
            return Err("raw theta bounds must be positive".into());
        }
        Ok(())
    }
}
