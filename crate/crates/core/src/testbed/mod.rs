//! Test surfaces, a queueing simulator and the linear baseline.

pub mod functions;
pub mod linear;
pub mod mm1;

pub use functions::{lookup, TestFunction};
pub use linear::{lm_fit, lm_predict, LinearModel};
pub use mm1::{mm1_analytic, mm1_simulate, Mm1Config, Mm1Error};
