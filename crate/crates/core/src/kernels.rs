//! Correlation functions and the hyperparameter conventions used by
//! different GP codes.
//!
//! Internally every kernel is driven by the canonical `θ` vector of the
//! product-form Gaussian correlation `exp(-Σ θ_k Δ_k²)`. The other
//! conventions are exact reparameterizations:
//!
//! | convention      | raw parameter | `θ`           |
//! |-----------------|---------------|---------------|
//! | `Theta`         | `θ`           | `θ`           |
//! | `Log10Theta`    | `β`           | `10^β`        |
//! | `InverseTheta`  | `d`           | `1/d`         |
//! | `LengthScale`   | `ℓ`           | `1/(2ℓ²)`     |
//!
//! The Matérn-5/2 kernel is written in lengthscale form; it shares the
//! same `θ` through `ℓ_k = 1/√(2θ_k)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("parameter {index} must be strictly positive (got {value})")]
    NonPositiveParameter { index: usize, value: f64 },
    #[error("parameter {index} is not finite")]
    NonFiniteParameter { index: usize },
    #[error("power-exponential exponent must lie in [1, 2] (got {0})")]
    ExponentOutOfRange(f64),
    #[error("expected {expected} parameters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel needs at least one input dimension")]
    NoDimensions,
}

/// Correlation family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `∏ exp(-θ_k |Δ_k|^p)`, `p ∈ [1, 2]`; `p = 2` is the Gaussian.
    PowerExponential { exponent: f64 },
    /// Matérn with `ν = 5/2`.
    Matern52,
}

impl Family {
    pub const GAUSSIAN: Family = Family::PowerExponential { exponent: 2.0 };

    pub fn validate(self) -> Result<Self, KernelError> {
        match self {
            Family::PowerExponential { exponent } if !(1.0..=2.0).contains(&exponent) => {
                Err(KernelError::ExponentOutOfRange(exponent))
            }
            other => Ok(other),
        }
    }

    /// Per-dimension distance term entering the kernel:
    /// `|Δ|^p` for the power exponential, `Δ²` for the Matérn.
    #[inline]
    pub(crate) fn distance_term(self, delta: f64) -> f64 {
        match self {
            Family::PowerExponential { exponent } => abs_pow(delta, exponent),
            Family::Matern52 => delta * delta,
        }
    }

    /// Correlation from the weighted sum `s = Σ θ_k · distance_term_k`.
    #[inline]
    pub(crate) fn from_weighted_sum(self, s: f64) -> f64 {
        match self {
            Family::PowerExponential { .. } => (-s).exp(),
            Family::Matern52 => {
                // h² = Σ Δ_k²/ℓ_k² = 2s
                let h = (2.0 * s).sqrt();
                matern52(h)
            }
        }
    }

    /// `∂R/∂θ_k = factor · distance_term_k`; returns the common factor.
    #[inline]
    pub(crate) fn derivative_factor(self, s: f64, corr: f64) -> f64 {
        match self {
            Family::PowerExponential { .. } => -corr,
            Family::Matern52 => {
                let h = (2.0 * s).sqrt();
                -(5.0 / 3.0) * (1.0 + SQRT5 * h) * (-SQRT5 * h).exp()
            }
        }
    }
}

/// `|x|^p`, with an exact zero at `x = 0` and plain squaring at `p = 2`.
#[inline]
fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if p == 2.0 {
        a * a
    } else {
        (p * a.ln()).exp()
    }
}

/// `g(h) = (1 + √5 h + 5h²/3) e^{-√5 h}`.
pub fn matern52(h: f64) -> f64 {
    let h = h.abs();
    (1.0 + SQRT5 * h + 5.0 / 3.0 * h * h) * (-SQRT5 * h).exp()
}

/// How the raw hyperparameters of a [`KernelSpec`] map to `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    Theta,
    Log10Theta,
    InverseTheta,
    LengthScale,
}

impl Parameterization {
    pub fn to_theta(self, raw: f64) -> f64 {
        match self {
            Parameterization::Theta => raw,
            Parameterization::Log10Theta => 10f64.powf(raw),
            Parameterization::InverseTheta => 1.0 / raw,
            Parameterization::LengthScale => 1.0 / (2.0 * raw * raw),
        }
    }

    pub fn from_theta(self, theta: f64) -> f64 {
        match self {
            Parameterization::Theta => theta,
            Parameterization::Log10Theta => theta.log10(),
            Parameterization::InverseTheta => 1.0 / theta,
            Parameterization::LengthScale => (1.0 / (2.0 * theta)).sqrt(),
        }
    }

    fn requires_positive(self) -> bool {
        !matches!(self, Parameterization::Log10Theta)
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameterization::Theta => "theta",
            Parameterization::Log10Theta => "log10",
            Parameterization::InverseTheta => "inv",
            Parameterization::LengthScale => "lensq",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "theta" => Parameterization::Theta,
            "log10" => Parameterization::Log10Theta,
            "inv" => Parameterization::InverseTheta,
            "lensq" => Parameterization::LengthScale,
            _ => return None,
        })
    }
}

/// A correlation family together with hyperparameters in some convention.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: Family,
    parameterization: Parameterization,
    params: Vec<f64>,
}

impl KernelSpec {
    pub fn new(
        family: Family,
        parameterization: Parameterization,
        params: Vec<f64>,
    ) -> Result<Self, KernelError> {
        let spec = Self { family: family.validate()?, parameterization, params };
        spec.to_canonical_theta()?;
        Ok(spec)
    }

    /// Expresses canonical `θ` in the requested convention.
    pub fn from_theta(
        family: Family,
        parameterization: Parameterization,
        theta: &[f64],
    ) -> Result<Self, KernelError> {
        let params = theta.iter().map(|&t| parameterization.from_theta(t)).collect();
        Self::new(family, parameterization, params)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dims(&self) -> usize {
        self.params.len()
    }

    pub fn to_canonical_theta(&self) -> Result<Vec<f64>, KernelError> {
        if self.params.is_empty() {
            return Err(KernelError::NoDimensions);
        }
        self.params
            .iter()
            .enumerate()
            .map(|(index, &raw)| {
                if !raw.is_finite() {
                    return Err(KernelError::NonFiniteParameter { index });
                }
                if self.parameterization.requires_positive() && raw <= 0.0 {
                    return Err(KernelError::NonPositiveParameter { index, value: raw });
                }
                let theta = self.parameterization.to_theta(raw);
                if !(theta > 0.0) || !theta.is_finite() {
                    return Err(KernelError::NonPositiveParameter { index, value: raw });
                }
                Ok(theta)
            })
            .collect()
    }

    /// Evaluator bound to the canonical `θ` of this spec.
    pub fn correlation_fn(&self) -> Result<Correlation, KernelError> {
        Ok(Correlation { family: self.family, theta: self.to_canonical_theta()? })
    }

    pub fn correlation(&self, xi: &[f64], xj: &[f64]) -> Result<f64, KernelError> {
        Ok(self.correlation_fn()?.eval(xi, xj))
    }

    pub fn correlation_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, KernelError> {
        Ok(self.correlation_fn()?.matrix(x))
    }

    pub fn cross_correlation(
        &self,
        x: &DMatrix<f64>,
        point: &[f64],
    ) -> Result<DVector<f64>, KernelError> {
        Ok(self.correlation_fn()?.cross(x, point))
    }
}

/// A correlation function with validated canonical `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    family: Family,
    theta: Vec<f64>,
}

impl Correlation {
    pub fn new(family: Family, theta: Vec<f64>) -> Result<Self, KernelError> {
        let family = family.validate()?;
        if theta.is_empty() {
            return Err(KernelError::NoDimensions);
        }
        for (index, &t) in theta.iter().enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(KernelError::NonPositiveParameter { index, value: t });
            }
        }
        Ok(Self { family, theta })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn eval(&self, xi: &[f64], xj: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.theta.len());
        debug_assert_eq!(xj.len(), self.theta.len());
        let s: f64 = self
            .theta
            .iter()
            .zip(xi.iter().zip(xj))
            .map(|(&t, (&a, &b))| t * self.family.distance_term(a - b))
            .sum();
        self.family.from_weighted_sum(s)
    }

    /// `R_ij = corr(x_i, x_j)` over the rows of `x`; exact unit diagonal.
    pub fn matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
        let mut r = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = self.eval(&rows[i], &rows[j]);
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    }

    /// `r_i = corr(x_i, point)`.
    pub fn cross(&self, x: &DMatrix<f64>, point: &[f64]) -> DVector<f64> {
        let mut row = vec![0.0; x.ncols()];
        DVector::from_fn(x.nrows(), |i, _| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = x[(i, k)];
            }
            self.eval(&row, point)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gauss(theta: Vec<f64>) -> KernelSpec {
        KernelSpec::new(Family::GAUSSIAN, Parameterization::Theta, theta).unwrap()
    }

    #[test]
    fn canonical_conversions() {
        let log = KernelSpec::new(Family::GAUSSIAN, Parameterization::Log10Theta, vec![0.0, 0.0]);
        assert_eq!(log.unwrap().to_canonical_theta().unwrap(), vec![1.0, 1.0]);
        let inv = KernelSpec::new(Family::GAUSSIAN, Parameterization::InverseTheta, vec![2.0]);
        assert_eq!(inv.unwrap().to_canonical_theta().unwrap(), vec![0.5]);
        let ls = KernelSpec::new(Family::GAUSSIAN, Parameterization::LengthScale, vec![1.0]);
        assert_eq!(ls.unwrap().to_canonical_theta().unwrap(), vec![0.5]);
    }

    #[test]
    fn rejects_non_positive_raw_params() {
        for p in [Parameterization::InverseTheta, Parameterization::LengthScale, Parameterization::Theta] {
            let err = KernelSpec::new(Family::GAUSSIAN, p, vec![1.0, 0.0]).unwrap_err();
            assert_eq!(err, KernelError::NonPositiveParameter { index: 1, value: 0.0 });
            assert!(KernelSpec::new(Family::GAUSSIAN, p, vec![-1.0]).is_err());
        }
        assert!(KernelSpec::new(Family::GAUSSIAN, Parameterization::Log10Theta, vec![-3.0]).is_ok());
        assert!(matches!(
            KernelSpec::new(Family::PowerExponential { exponent: 2.5 }, Parameterization::Theta, vec![1.0]),
            Err(KernelError::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn correlation_examples() {
        let g = gauss(vec![1.0]);
        assert_eq!(g.correlation(&[0.3], &[0.3]).unwrap(), 1.0);
        assert_relative_eq!(g.correlation(&[0.0], &[1.0]).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let g2 = gauss(vec![1.0, 1.0]);
        assert_relative_eq!(g2.correlation(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn matern_example() {
        // ℓ = 1  ⇔  θ = 1/2; |Δ| = 1/√5 gives h = 1/√5
        let m = KernelSpec::new(Family::Matern52, Parameterization::LengthScale, vec![1.0]).unwrap();
        let h = 1.0 / 5f64.sqrt();
        // direct evaluation of g(h) = (1 + √5h + 5h²/3)exp(-√5h)
        let expected = (1.0 + 1.0 + 5.0 / 3.0 * (1.0 / 5.0)) * (-1.0f64).exp();
        assert_relative_eq!(m.correlation(&[0.0], &[h]).unwrap(), expected, max_relative = 1e-14);
        assert_eq!(m.correlation(&[0.4], &[0.4]).unwrap(), 1.0);
    }

    #[test]
    fn matrix_examples() {
        let g = gauss(vec![1.0]);
        let one = DMatrix::from_row_slice(1, 1, &[0.2]);
        assert_eq!(g.correlation_matrix(&one).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let dup = DMatrix::from_row_slice(2, 1, &[0.5, 0.5]);
        assert_eq!(g.correlation_matrix(&dup).unwrap(), DMatrix::from_element(2, 2, 1.0));
        let line = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let r = g.correlation_matrix(&line).unwrap();
        assert_relative_eq!(r[(0, 1)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(r[(1, 2)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(r[(0, 2)], (-4.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn cross_examples() {
        let g = gauss(vec![1.0]);
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let r = g.cross_correlation(&x, &[1.0]).unwrap();
        assert_eq!(r[1], 1.0);
        let mid = g.cross_correlation(&x, &[0.5]).unwrap();
        assert_relative_eq!(mid[0], (-0.25f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(mid[1], (-0.25f64).exp(), epsilon = 1e-15);
        let far = g.cross_correlation(&x, &[1e3]).unwrap();
        assert!(far.iter().all(|&v| v < 1e-300));
    }

    #[test]
    fn non_integer_exponent_at_zero_distance() {
        let k = KernelSpec::new(Family::PowerExponential { exponent: 1.95 }, Parameterization::Theta, vec![3.0, 2.0])
            .unwrap();
        assert_eq!(k.correlation(&[0.1, 0.9], &[0.1, 0.9]).unwrap(), 1.0);
        let v = k.correlation(&[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_relative_eq!(v, (-3.0 * 0.5f64.powf(1.95)).exp(), max_relative = 1e-14);
    }

    fn family_strategy() -> impl Strategy<Value = Family> {
        prop_oneof![
            (1.0f64..=2.0).prop_map(|exponent| Family::PowerExponential { exponent }),
            Just(Family::Matern52),
        ]
    }

    proptest! {
        #[test]
        fn conventions_agree(
            family in family_strategy(),
            theta in prop::collection::vec(1e-3f64..1e2, 1..4),
            pts in prop::collection::vec(0.0f64..1.0, 12),
        ) {
            let d = theta.len();
            let n = pts.len() / d;
            let x = DMatrix::from_row_slice(n, d, &pts[..n * d]);
            let reference = KernelSpec::new(family, Parameterization::Theta, theta.clone()).unwrap()
                .correlation_matrix(&x).unwrap();
            for p in [Parameterization::Log10Theta, Parameterization::InverseTheta, Parameterization::LengthScale] {
                let m = KernelSpec::from_theta(family, p, &theta).unwrap().correlation_matrix(&x).unwrap();
                prop_assert!((m - &reference).amax() < 1e-14);
            }
        }

        #[test]
        fn symmetric_and_bounded(
            family in family_strategy(),
            theta in prop::collection::vec(1e-3f64..1e2, 3),
            a in prop::collection::vec(-1.0f64..2.0, 3),
            b in prop::collection::vec(-1.0f64..2.0, 3),
        ) {
            let k = KernelSpec::new(family, Parameterization::Theta, theta).unwrap();
            let ab = k.correlation(&a, &b).unwrap();
            prop_assert_eq!(ab, k.correlation(&b, &a).unwrap());
            prop_assert!(ab >= 0.0 && ab <= 1.0);
        }

        #[test]
        fn monotone_decay(
            family in family_strategy(),
            theta in prop::collection::vec(1e-2f64..1e2, 2),
            dir in prop::collection::vec(-1.0f64..1.0, 2),
            t1 in 0.0f64..1.0,
            dt in 0.0f64..1.0,
        ) {
            let k = KernelSpec::new(family, Parameterization::Theta, theta).unwrap();
            let origin = [0.0, 0.0];
            let p1 = [dir[0] * t1, dir[1] * t1];
            let t2 = t1 + dt;
            let p2 = [dir[0] * t2, dir[1] * t2];
            prop_assert!(k.correlation(&origin, &p2).unwrap() <= k.correlation(&origin, &p1).unwrap());
        }
    }
}
