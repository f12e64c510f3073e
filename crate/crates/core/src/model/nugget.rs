//! Nugget strategies: how the diagonal of the correlation matrix is inflated.

use nalgebra::DMatrix;

use crate::linalg::{self, LinalgError};

/// The `a` in the stability lower bound; 25 suits space-filling designs.
pub const STABILITY_A: f64 = 25.0;

/// Starting nugget for [`NuggetStrategy::Estimated`] when none is given.
pub const DEFAULT_NUGGET_START: f64 = 1e-6;

/// Search bounds for an estimated scalar nugget (natural log is searched).
pub const NUGGET_BOUNDS: (f64, f64) = (1e-9, 1e-1);

/// Search bounds for the multiplicative constant `c` of stochastic kriging.
pub const NOISE_SCALE_BOUNDS: (f64, f64) = (1e-4, 1e4);

/// First rung and cap of the jitter-escalation ladder.
pub const JITTER_START: f64 = 1e-12;
pub const JITTER_CAP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum NuggetStrategy {
    /// Constant `δ ≥ 0`.
    Fixed(f64),
    /// `δ` is a free parameter of the likelihood, started at `start > 0`.
    Estimated { start: f64 },
    /// Smallest `δ` that keeps `κ(R + δI)` below `e^a` (recomputed for every `θ`).
    StabilityLowerBound,
    /// `2.22·(10 + n)·10⁻¹⁶`.
    DaceDefault,
    /// Stochastic kriging: one nugget per design point, proportional to the
    /// supplied noise variances (in output units², variance of the point mean).
    PerPoint { variances: Vec<f64>, scale: NoiseScale },
}

/// How per-point noise variances become nuggets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseScale {
    /// `δ_i = c·v_i` with `c` estimated jointly with `θ` (`start` is `c₀`).
    Joint { start: f64 },
    /// `δ_i = v_i / σ̂²`, iterated to a fixed point with the profile `σ̂²`.
    SigmaRelative,
}

impl NuggetStrategy {
    pub fn estimated() -> Self {
        NuggetStrategy::Estimated { start: DEFAULT_NUGGET_START }
    }

    pub fn validate(&self, n: usize) -> Result<(), String> {
        match self {
            NuggetStrategy::Fixed(d) if !(*d >= 0.0) || !d.is_finite() => {
                Err(format!("fixed nugget must be finite and >= 0 (got {d})"))
            }
            NuggetStrategy::Estimated { start } if !(*start > 0.0) || !start.is_finite() => {
                Err(format!("nugget start must be > 0 (got {start})"))
            }
            NuggetStrategy::PerPoint { variances, scale } => {
                if variances.len() != n {
                    return Err(format!("expected {n} per-point variances, got {}", variances.len()));
                }
                if variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err("per-point variances must be finite and >= 0".into());
                }
                if let NoiseScale::Joint { start } = scale {
                    if !(*start > 0.0) || !start.is_finite() {
                        return Err(format!("noise scale start must be > 0 (got {start})"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A realized nugget.
#[derive(Debug, Clone, PartialEq)]
pub enum Nugget {
    Scalar(f64),
    PerPoint(Vec<f64>),
}

impl Nugget {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Nugget::Scalar(d) => *d,
            Nugget::PerPoint(v) => v[i],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Nugget::Scalar(d) => *d == 0.0,
            Nugget::PerPoint(v) => v.iter().all(|&d| d == 0.0),
        }
    }

    /// Raises every entry to at least `floor`.
    pub fn with_floor(&self, floor: f64) -> Nugget {
        match self {
            Nugget::Scalar(d) => Nugget::Scalar(d.max(floor)),
            Nugget::PerPoint(v) => Nugget::PerPoint(v.iter().map(|d| d.max(floor)).collect()),
        }
    }

    pub fn largest(&self) -> f64 {
        match self {
            Nugget::Scalar(d) => *d,
            Nugget::PerPoint(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `R + diag(δ)`.
    pub fn apply(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = r.clone();
        for i in 0..out.nrows() {
            out[(i, i)] += self.at(i);
        }
        out
    }
}

pub fn dace_nugget(n: usize) -> f64 {
    2.22 * (10 + n) as f64 * 1e-16
}

/// `δ_lb = max{λ_n(κ − e^a) / (κ(e^a − 1)), 0}` for the correlation matrix `r`.
///
/// An infinite condition number gives the limit `λ_n / (e^a − 1)`.
pub fn stability_lower_bound(r: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let eig = linalg::symmetric_eigenvalues(r)?;
    let lambda_max = *eig.last().ok_or(LinalgError::NotSquare { rows: 0, cols: 0 })?;
    let kappa = linalg::condition_from_eigenvalues(&eig)?;
    Ok(stability_bound_from(lambda_max, kappa))
}

pub(crate) fn stability_bound_from(lambda_max: f64, kappa: f64) -> f64 {
    let ea = STABILITY_A.exp();
    let bound = if kappa.is_infinite() {
        lambda_max / (ea - 1.0)
    } else {
        lambda_max * (kappa - ea) / (kappa * (ea - 1.0))
    };
    bound.max(0.0)
}

/// Nugget implied by `strategy` for correlation matrix `r`.
///
/// `iterate` is the optimizer's current value of whatever the strategy
/// estimates: `δ` for [`NuggetStrategy::Estimated`], `c` for joint-scale
/// stochastic kriging and `σ̂²` for the sigma-relative mode. When absent the
/// strategy's starting value is used.
pub fn realize_nugget(
    strategy: &NuggetStrategy,
    r: &DMatrix<f64>,
    iterate: Option<f64>,
) -> Result<Nugget, LinalgError> {
    let n = r.nrows();
    Ok(match strategy {
        NuggetStrategy::Fixed(d) => Nugget::Scalar(*d),
        NuggetStrategy::DaceDefault => Nugget::Scalar(dace_nugget(n)),
        NuggetStrategy::StabilityLowerBound => Nugget::Scalar(stability_lower_bound(r)?),
        NuggetStrategy::Estimated { start } => Nugget::Scalar(iterate.unwrap_or(*start)),
        NuggetStrategy::PerPoint { variances, scale } => match scale {
            NoiseScale::Joint { start } => {
                let c = iterate.unwrap_or(*start);
                Nugget::PerPoint(variances.iter().map(|v| c * v).collect())
            }
            NoiseScale::SigmaRelative => {
                let sigma2 = iterate.unwrap_or(1.0);
                Nugget::PerPoint(variances.iter().map(|v| v / sigma2).collect())
            }
        },
    })
}

/// Candidate nuggets tried by the jitter ladder after `nugget` itself fails:
/// `max(δ, 10⁻¹²)`, then ×10 per rung, never above `10⁻⁴`.
pub fn jitter_ladder(nugget: &Nugget) -> Vec<Nugget> {
    let mut rungs = Vec::new();
    let mut floor = nugget.largest().max(JITTER_START);
    while floor <= JITTER_CAP * (1.0 + 1e-9) {
        let candidate = nugget.with_floor(floor);
        if candidate != *nugget {
            rungs.push(candidate);
        }
        floor *= 10.0;
    }
    rungs
}
