//! Macroreplicated accuracy experiments comparing fitting profiles against a
//! linear baseline.

pub mod experiment;
pub mod metrics;
pub mod output;
pub mod profiles;
pub mod sk;

pub use experiment::{macrorep_data, run_experiment, score_profile, BenchResult, ExperimentSpec, ScoringData};
pub use metrics::{emrmse, median, pmrmse, xi_pi, MetricError};
pub use output::{
    summarize, underestimation_fraction, write_plot_data, write_results, write_summary, GroupSummary, PLOT_HEADER,
    RESULTS_HEADER,
};
pub use profiles::{builtin_profiles, profile_by_label, profile_labels, stochastic_profiles, FitProfile, ProfileNugget};
pub use sk::{allocate, run_sk_mm1, simulate_two_stage, SkSpec, SK_DESIGN};
