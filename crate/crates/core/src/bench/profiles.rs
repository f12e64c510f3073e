//! Named fitting configurations compared by the harness.

use crate::estimation::FitConfig;
use crate::kernels::{Family, Parameterization};
use crate::model::nugget::{NoiseScale, NuggetStrategy, DEFAULT_NUGGET_START};

/// Nugget choice of a profile; stochastic-kriging modes get their per-point
/// variances from the data at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileNugget {
    Fixed(f64),
    Estimated,
    StabilityLowerBound,
    DaceDefault,
    NoiseJoint,
    NoiseSigmaRelative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProfile {
    pub label: String,
    pub family: Family,
    pub parameterization: Parameterization,
    pub nugget: ProfileNugget,
    pub n_starts: Option<usize>,
    pub max_iters: Option<usize>,
}

impl FitProfile {
    pub fn new(label: &str, family: Family, parameterization: Parameterization, nugget: ProfileNugget) -> Self {
        Self { label: label.to_string(), family, parameterization, nugget, n_starts: None, max_iters: None }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.nugget, ProfileNugget::NoiseJoint | ProfileNugget::NoiseSigmaRelative)
    }

    /// Fit configuration; `variances` are required by stochastic profiles.
    pub fn config(&self, seed: u64, variances: Option<&[f64]>) -> FitConfig {
        let nugget = match self.nugget {
            ProfileNugget::Fixed(v) => NuggetStrategy::Fixed(v),
            ProfileNugget::Estimated => NuggetStrategy::Estimated { start: DEFAULT_NUGGET_START },
            ProfileNugget::StabilityLowerBound => NuggetStrategy::StabilityLowerBound,
            ProfileNugget::DaceDefault => NuggetStrategy::DaceDefault,
            ProfileNugget::NoiseJoint | ProfileNugget::NoiseSigmaRelative => {
                let scale = if self.nugget == ProfileNugget::NoiseJoint {
                    NoiseScale::Joint { start: 1.0 }
                } else {
                    NoiseScale::SigmaRelative
                };
                let variances = variances.expect("stochastic profiles need per-point variances").to_vec();
                NuggetStrategy::PerPoint { variances, scale }
            }
        };
        let mut cfg = FitConfig::default().with_seed(seed).with_nugget(nugget);
        if let Some(s) = self.n_starts {
            cfg.n_starts = s;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        cfg
    }
}

const PEXP195: Family = Family::PowerExponential { exponent: 1.95 };

/// Deterministic-surface profiles, in report order.
pub fn builtin_profiles() -> Vec<FitProfile> {
    use Parameterization::*;
    use ProfileNugget::*;
    vec![
        FitProfile::new("gauss-nug0", Family::GAUSSIAN, Log10Theta, Fixed(0.0)),
        FitProfile::new("gauss-nugE", Family::GAUSSIAN, Theta, Estimated),
        FitProfile::new("gauss-dlb", Family::GAUSSIAN, Log10Theta, StabilityLowerBound),
        FitProfile::new("pexp195-dlb", PEXP195, Log10Theta, StabilityLowerBound),
        FitProfile::new("gauss-nug6", Family::GAUSSIAN, InverseTheta, Fixed(1e-6)),
        FitProfile::new("gauss-dace", Family::GAUSSIAN, Theta, DaceDefault),
        FitProfile::new("matern52-nugE", Family::Matern52, LengthScale, Estimated),
        FitProfile::new("gauss-nug10", Family::GAUSSIAN, LengthScale, Fixed(1e-10)),
    ]
}

/// Profiles usable for replicated (noisy) data.
pub fn stochastic_profiles() -> Vec<FitProfile> {
    use ProfileNugget::*;
    vec![
        FitProfile::new("sk-joint", Family::GAUSSIAN, Parameterization::Theta, NoiseJoint),
        FitProfile::new("sk-relative", Family::GAUSSIAN, Parameterization::Theta, NoiseSigmaRelative),
        FitProfile::new("matern52-sk-joint", Family::Matern52, Parameterization::LengthScale, NoiseJoint),
    ]
}

pub fn profile_by_label(label: &str) -> Option<FitProfile> {
    builtin_profiles().into_iter().chain(stochastic_profiles()).find(|p| p.label == label)
}

pub fn profile_labels() -> Vec<String> {
    builtin_profiles().into_iter().chain(stochastic_profiles()).map(|p| p.label).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_unique() {
        let mut labels = profile_labels();
        let n = labels.len();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), n);
    }

    #[test]
    fn config_carries_nugget() {
        let p = profile_by_label("gauss-nug6").unwrap();
        assert_eq!(p.config(1, None).nugget, NuggetStrategy::Fixed(1e-6));
        let sk = profile_by_label("sk-joint").unwrap();
        assert!(sk.is_stochastic());
        assert!(matches!(sk.config(1, Some(&[1.0, 2.0])).nugget, NuggetStrategy::PerPoint { .. }));
    }
}
