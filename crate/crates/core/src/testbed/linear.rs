//! Least-squares hyperplane used as the accuracy baseline.

use nalgebra::{DMatrix, DVector};

/// `ŷ = b₀ + Σ b_k x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Intercept first, then one slope per input.
    pub coefficients: Vec<f64>,
    /// The design matrix `[1 X]` had less than full column rank; the
    /// minimum-norm least-squares solution was returned.
    pub rank_deficient: bool,
}

/// Ordinary least squares through the SVD of `[1 X]`.
pub fn lm_fit(x: &DMatrix<f64>, y: &[f64]) -> LinearModel {
    let (n, d) = x.shape();
    assert_eq!(y.len(), n, "one output per design row");
    let a = DMatrix::from_fn(n, d + 1, |i, k| if k == 0 { 1.0 } else { x[(i, k - 1)] });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = f64::EPSILON * n.max(d + 1) as f64 * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let b = DVector::from_column_slice(y);
    let coef = svd.solve(&b, tol).expect("both factors were computed");
    LinearModel { coefficients: coef.iter().copied().collect(), rank_deficient: rank < d + 1 }
}

impl LinearModel {
    pub fn predict(&self, point: &[f64]) -> f64 {
        self.coefficients[0] + self.coefficients[1..].iter().zip(point).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.coefficients[0] + (0..x.ncols()).map(|k| self.coefficients[k + 1] * x[(i, k)]).sum::<f64>())
            .collect()
    }
}

pub fn lm_predict(model: &LinearModel, x: &DMatrix<f64>) -> Vec<f64> {
    model.predict_rows(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs;
    use rand::Rng;

    #[test]
    fn exact_plane_is_recovered() {
        let x = designs::random_lhs(12, 3, 2);
        let y: Vec<f64> = (0..12).map(|i| 1.5 - 2.0 * x[(i, 0)] + 0.5 * x[(i, 2)]).collect();
        let m = lm_fit(&x, &y);
        assert!(!m.rank_deficient);
        for (p, t) in m.predict_rows(&x).iter().zip(&y) {
            assert!((p - t).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_outputs() {
        let x = designs::random_lhs(7, 2, 3);
        let m = lm_fit(&x, &[4.0; 7]);
        assert!((m.coefficients[0] - 4.0).abs() < 1e-12);
        assert!(m.coefficients[1..].iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn matches_normal_equations() {
        let x = designs::random_lhs(30, 4, 5);
        let mut rng = crate::seeds::rng(8);
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = DMatrix::from_fn(30, 5, |i, k| if k == 0 { 1.0 } else { x[(i, k - 1)] });
        let oracle = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * DVector::from_vec(y.clone());
        let m = lm_fit(&x, &y);
        for (a, b) in m.coefficients.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        // no small perturbation of a coefficient lowers the residual sum of squares
        let sse = |c: &[f64]| {
            let lm = LinearModel { coefficients: c.to_vec(), rank_deficient: false };
            lm.predict_rows(&x).iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>()
        };
        let base = sse(&m.coefficients);
        for k in 0..5 {
            for h in [1e-4, -1e-4] {
                let mut c = m.coefficients.clone();
                c[k] += h;
                assert!(sse(&c) >= base);
            }
        }
    }

    #[test]
    fn underdetermined_is_flagged() {
        let x = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.9]);
        let m = lm_fit(&x, &[1.0, 2.0]);
        assert!(m.rank_deficient);
        for (p, t) in m.predict_rows(&x).iter().zip([1.0, 2.0]) {
            assert!((p - t).abs() < 1e-10);
        }
    }
}
