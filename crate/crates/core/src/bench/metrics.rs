use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no prediction points")]
    Empty,
    #[error("error estimate {value} at point {index} is negative")]
    NegativeVariance { index: usize, value: f64 },
    #[error("linear baseline is exact; ratios are undefined")]
    ZeroBaseline,
}

/// Root mean squared prediction error.
pub fn emrmse(predictions: &[f64], truths: &[f64]) -> Result<f64, MetricError> {
    if predictions.len() != truths.len() {
        return Err(MetricError::DimensionMismatch { expected: truths.len(), got: predictions.len() });
    }
    if truths.is_empty() {
        return Err(MetricError::Empty);
    }
    let sse: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / truths.len() as f64).sqrt())
}

/// Root of the mean predicted squared error.
pub fn pmrmse(mse: &[f64]) -> Result<f64, MetricError> {
    if mse.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some((index, &value)) = mse.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(MetricError::NegativeVariance { index, value });
    }
    Ok((mse.iter().sum::<f64>() / mse.len() as f64).sqrt())
}

/// `(ξ, π) = (EMRMSE_gp, PMRMSE_gp) / EMRMSE_lm`.
pub fn xi_pi(emrmse_gp: f64, pmrmse_gp: f64, emrmse_lm: f64) -> Result<(f64, f64), MetricError> {
    if !(emrmse_lm > 0.0) {
        return Err(MetricError::ZeroBaseline);
    }
    Ok((emrmse_gp / emrmse_lm, pmrmse_gp / emrmse_lm))
}

/// Median of the finite values (`NaN` if there are none).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emrmse_examples() {
        assert_eq!(emrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((emrmse(&[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(emrmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), (25.0f64 / 2.0).sqrt());
        assert!(emrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pmrmse_examples() {
        assert_eq!(pmrmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(pmrmse(&[4.0; 5]).unwrap(), 2.0);
        assert_eq!(pmrmse(&[1.0, 9.0]).unwrap(), 5f64.sqrt());
        assert_eq!(pmrmse(&[1.0, -1.0]), Err(MetricError::NegativeVariance { index: 1, value: -1.0 }));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(xi_pi(0.3, 0.2, 0.3).unwrap().0, 1.0);
        assert_eq!(xi_pi(0.0, 0.0, 0.3).unwrap().0, 0.0);
        assert!((xi_pi(0.05, 0.04, 0.5).unwrap().0 - 0.1).abs() < 1e-15);
        assert_eq!(xi_pi(0.1, 0.1, 0.0), Err(MetricError::ZeroBaseline));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[f64::NAN]).is_nan());
    }
}
