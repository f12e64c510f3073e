//! Parsers for the compact kernel, nugget and parameterization flags.

use gpbench::bench::{builtin_profiles, profile_by_label, profile_labels, FitProfile};
use gpbench::model::nugget::DEFAULT_NUGGET_START;
use gpbench::{Family, NuggetStrategy, Parameterization};

/// `gauss`, `pexp:P` or `matern52`.
pub fn parse_kernel(s: &str) -> Result<Family, String> {
    match s {
        "gauss" => Ok(Family::GAUSSIAN),
        "matern52" => Ok(Family::Matern52),
        _ => {
            let p = s
                .strip_prefix("pexp:")
                .ok_or_else(|| format!("unknown kernel {s:?} (expected gauss, pexp:P or matern52)"))?;
            let exponent: f64 = p.parse().map_err(|_| format!("bad power-exponential exponent {p:?}"))?;
            Family::PowerExponential { exponent }.validate().map_err(|e| e.to_string())
        }
    }
}

/// `fixed:V`, `estimate`, `dlb` or `dace`.
pub fn parse_nugget(s: &str) -> Result<NuggetStrategy, String> {
    match s {
        "estimate" => Ok(NuggetStrategy::Estimated { start: DEFAULT_NUGGET_START }),
        "dlb" => Ok(NuggetStrategy::StabilityLowerBound),
        "dace" => Ok(NuggetStrategy::DaceDefault),
        _ => {
            let v = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("unknown nugget {s:?} (expected fixed:V, estimate, dlb or dace)"))?;
            let v: f64 = v.parse().map_err(|_| format!("bad nugget value {v:?}"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("nugget must be a finite non-negative number (got {v})"));
            }
            Ok(NuggetStrategy::Fixed(v))
        }
    }
}

pub fn parse_param(s: &str) -> Result<Parameterization, String> {
    Parameterization::from_name(s).ok_or_else(|| format!("unknown parameterization {s:?} (expected theta, log10, inv or lensq)"))
}

/// Comma-separated profile labels; empty means every deterministic profile.
pub fn parse_profiles(list: Option<&str>, default: Vec<FitProfile>) -> Result<Vec<FitProfile>, String> {
    let Some(list) = list else { return Ok(default) };
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|l| {
            profile_by_label(l)
                .ok_or_else(|| format!("unknown profile {l:?}; valid profiles: {}", profile_labels().join(", ")))
        })
        .collect()
}

pub fn default_profiles() -> Vec<FitProfile> {
    builtin_profiles()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels() {
        assert_eq!(parse_kernel("gauss").unwrap(), Family::GAUSSIAN);
        assert_eq!(parse_kernel("pexp:1.95").unwrap(), Family::PowerExponential { exponent: 1.95 });
        assert!(parse_kernel("pexp:3").is_err());
        assert!(parse_kernel("rbf").is_err());
    }

    #[test]
    fn nuggets() {
        assert_eq!(parse_nugget("fixed:1e-6").unwrap(), NuggetStrategy::Fixed(1e-6));
        assert_eq!(parse_nugget("dlb").unwrap(), NuggetStrategy::StabilityLowerBound);
        assert!(parse_nugget("fixed:-1").is_err());
        assert!(parse_nugget("auto").is_err());
    }

    #[test]
    fn profiles() {
        assert_eq!(parse_profiles(None, default_profiles()).unwrap().len(), 8);
        assert_eq!(parse_profiles(Some("gauss-nugE, gauss-dlb"), vec![]).unwrap().len(), 2);
        assert!(parse_profiles(Some("nope"), vec![]).unwrap_err().contains("gauss-nugE"));
    }
}
