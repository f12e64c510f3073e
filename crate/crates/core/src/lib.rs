//! Gaussian-process (kriging) metamodels and a harness for benchmarking them.
//!
//! * [`linalg`]: Cholesky factorization and spectral helpers.
//! * [`kernels`]: correlation families and hyperparameter conventions.
//! * [`model`]: fitted models, predictions and nugget strategies.
//! * [`estimation`]: deviance, gradient and the bounded multistart optimizer.
//! * [`designs`]: maximin Latin hypercubes and output scaling.
//! * [`testbed`]: analytic test functions, an M/M/1 simulator and the linear baseline.
//! * [`bench`]: macroreplicated accuracy experiments.

pub mod bench;
pub mod designs;
pub mod estimation;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod seeds;
pub mod testbed;

pub use estimation::{FitConfig, SearchTransform};
pub use kernels::{Family, KernelSpec, Parameterization};
pub use model::{fit, fit_from, FitError, GpModel, Nugget, NuggetStrategy, Prediction};
