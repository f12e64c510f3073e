//! Dense symmetric positive-definite linear algebra.
//!
//! Every `R⁻¹v` product in the predictor, the error model and the deviance
//! goes through [`SpdFactor`]. Nothing here regularizes silently: a failed
//! factorization is reported and the caller decides how much jitter to add.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Iteration cap handed to the symmetric eigensolver.
const EIGEN_MAX_ITERS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    logdet: f64,
}

impl SpdFactor {
    /// Rebuilds a factor from a stored lower triangle (model files).
    pub fn from_lower(lower: DMatrix<f64>) -> Result<Self, LinalgError> {
        if lower.nrows() != lower.ncols() {
            return Err(LinalgError::NotSquare { rows: lower.nrows(), cols: lower.ncols() });
        }
        let mut logdet = 0.0;
        for i in 0..lower.nrows() {
            let d = lower[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { row: i, pivot: d });
            }
            logdet += 2.0 * d.ln();
        }
        Ok(Self { lower, logdet })
    }

    pub fn order(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// `log|A|`, i.e. `Σ 2·log(L_ii)`.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Forward substitution: returns `L⁻¹b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        self.check_len(b.len())?;
        let n = self.order();
        let mut x = b.clone();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lower[(i, k)] * x[k];
            }
            x[i] = acc / self.lower[(i, i)];
        }
        Ok(x)
    }

    /// Back substitution: returns `L⁻ᵀb`.
    pub fn solve_upper(&self, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        self.check_len(b.len())?;
        let n = self.order();
        let mut x = b.clone();
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.lower[(k, i)] * x[k];
            }
            x[i] = acc / self.lower[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A·x = b` with two triangular solves.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        let z = self.solve_lower(b)?;
        self.solve_upper(&z)
    }

    /// `A⁻¹` assembled as `L⁻ᵀL⁻¹`.
    ///
    /// Only the likelihood gradient needs this (its trace terms touch every
    /// entry); predictions and the deviance itself use [`SpdFactor::solve`].
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.order();
        // columns of L⁻¹, built by forward substitution on unit vectors
        let mut linv = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            linv[(j, j)] = 1.0 / self.lower[(j, j)];
            for i in (j + 1)..n {
                let mut acc = 0.0;
                for k in j..i {
                    acc -= self.lower[(i, k)] * linv[(k, j)];
                }
                linv[(i, j)] = acc / self.lower[(i, i)];
            }
        }
        linv.tr_mul(&linv)
    }

    /// `L·Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    fn check_len(&self, got: usize) -> Result<(), LinalgError> {
        if got != self.order() {
            return Err(LinalgError::DimensionMismatch { expected: self.order(), got });
        }
        Ok(())
    }
}

/// Cholesky factorization of a symmetric matrix; only the lower triangle is read.
///
/// A pivot that is not finite or does not exceed `ε·A_jj` is reported as
/// [`LinalgError::NotPositiveDefinite`].
pub fn cholesky(a: &DMatrix<f64>) -> Result<SpdFactor, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !pivot.is_finite() || pivot <= f64::EPSILON * a[(j, j)].abs() || pivot <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { row: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        logdet += 2.0 * ljj.ln();
        for i in (j + 1)..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(SpdFactor { lower: l, logdet })
}

pub fn solve_spd(factor: &SpdFactor, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    factor.solve(b)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or(LinalgError::NoConvergence)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn largest_eigenvalue(a: &DMatrix<f64>) -> Result<f64, LinalgError> {
    symmetric_eigenvalues(a)?.last().copied().ok_or(LinalgError::NotSquare { rows: 0, cols: 0 })
}

/// 2-norm condition number `λ_max / λ_min`.
///
/// Returns `+∞` when the smallest eigenvalue is at or below `n·ε·λ_max`,
/// which is the signal the stability-bound nugget consumes.
pub fn condition_number(a: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let values = symmetric_eigenvalues(a)?;
    condition_from_eigenvalues(&values)
}

pub(crate) fn condition_from_eigenvalues(values: &[f64]) -> Result<f64, LinalgError> {
    let (Some(&min), Some(&max)) = (values.first(), values.last()) else {
        return Err(LinalgError::NotSquare { rows: 0, cols: 0 });
    };
    let threshold = values.len() as f64 * f64::EPSILON * max.abs();
    if min <= threshold {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m.transpose() * &m + DMatrix::identity(n, n)
    }

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / a.norm()
    }

    #[test]
    fn identity_factor() {
        let f = cholesky(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.lower(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(f.logdet(), 0.0);
    }

    #[test]
    fn diagonal_factor() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let f = cholesky(&a).unwrap();
        assert_eq!(f.lower()[(0, 0)], 2.0);
        assert_eq!(f.lower()[(1, 1)], 3.0);
        assert_relative_eq!(f.logdet(), 36f64.ln(), epsilon = 1e-15);
        let x = f.solve(&DVector::from_vec(vec![4.0, 9.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn random_spd_reconstructs() {
        let a = random_spd(5, 7);
        let f = cholesky(&a).unwrap();
        assert!(rel_frobenius(&a, &f.reconstruct()) < 1e-10);
    }

    #[test]
    fn solve_residual_small() {
        let a = random_spd(6, 11);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5]);
        let x = solve_spd(&cholesky(&a).unwrap(), &b).unwrap();
        assert!((&a * x - b).norm() < 1e-9);
    }

    #[test]
    fn identity_solve_is_identity() {
        let f = cholesky(&DMatrix::identity(3, 3)).unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let f = cholesky(&DMatrix::identity(3, 3)).unwrap();
        let err = f.solve(&DVector::from_vec(vec![1.0, 2.0])).unwrap_err();
        assert_eq!(err, LinalgError::DimensionMismatch { expected: 3, got: 2 });
    }

    #[test]
    fn singular_matrix_fails() {
        let a = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(cholesky(&a), Err(LinalgError::NotPositiveDefinite { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&b), Err(LinalgError::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn inverse_matches_lu() {
        let a = random_spd(7, 3);
        let inv = cholesky(&a).unwrap().inverse();
        let lu = a.clone().try_inverse().unwrap();
        assert!(rel_frobenius(&lu, &inv) < 1e-12);
    }

    #[test]
    fn eigen_examples() {
        assert_relative_eq!(largest_eigenvalue(&DMatrix::identity(4, 4)).unwrap(), 1.0, epsilon = 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 2.0]));
        assert_relative_eq!(largest_eigenvalue(&d).unwrap(), 5.0, max_relative = 1e-6);
        let ones = DMatrix::from_element(4, 4, 1.0);
        assert_relative_eq!(largest_eigenvalue(&ones).unwrap(), 4.0, max_relative = 1e-6);
    }

    #[test]
    fn condition_examples() {
        assert_eq!(condition_number(&DMatrix::identity(5, 5)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![100.0, 1.0]));
        assert_relative_eq!(condition_number(&d).unwrap(), 100.0, max_relative = 1e-4);
        // eigenvalues 1 ± ρ
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.99, 0.99, 1.0]);
        assert_relative_eq!(condition_number(&c).unwrap(), 1.99 / 0.01, max_relative = 1e-4);
        assert_eq!(condition_number(&DMatrix::from_element(3, 3, 1.0)).unwrap(), f64::INFINITY);
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn reconstruct_is_identity(n in 1usize..=20, seed in any::<u64>()) {
                let a = random_spd(n, seed);
                let f = cholesky(&a).unwrap();
                prop_assert!(rel_frobenius(&a, &f.reconstruct()) < 1e-10);
                prop_assert!((0..n).all(|i| f.lower()[(i, i)] > 0.0));
            }

            #[test]
            fn solve_recovers_x(n in 1usize..=20, seed in any::<u64>()) {
                let a = random_spd(n, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let x = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
                let got = cholesky(&a).unwrap().solve(&(&a * &x)).unwrap();
                prop_assert!((got - x).amax() < 1e-9);
            }

            #[test]
            fn condition_is_scale_invariant(n in 1usize..=12, seed in any::<u64>(), scale in 1e-3f64..1e3) {
                let a = random_spd(n, seed);
                let k1 = condition_number(&a).unwrap();
                let k2 = condition_number(&(a * scale)).unwrap();
                prop_assert!((k1 - k2).abs() <= 1e-8 * k1);
            }
        }
    }
}
