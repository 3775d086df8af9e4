//! L2 boosting with componentwise linear least squares for high-dimensional
//! linear regression and two-class problems.
//!
//! The main entry points are [`standardize`] and [`boost_fit`], followed by
//! a stopping rule such as [`aicc_stop`]. Comparison estimators live in
//! [`baselines`], the Monte Carlo harness in [`simulation`], and the
//! population greedy algorithm in [`greedy`].

pub mod base_learner;
pub mod baselines;
pub mod boosting;
pub mod classification;
pub mod data;
pub mod error;
pub mod greedy;
pub mod linalg;
pub mod model_selection;
pub mod simulation;

pub use base_learner::{componentwise_ls, BaseFit};
pub use boosting::{boost_fit, BoostConfig, BoostPath, BoostStep, Variant};
pub use data::{exact_mse, standardize, unstandardize_coefficients, Dataset, SparseCoefficients, Standardization, StandardizedDesign};
pub use error::{Error, Result};
pub use model_selection::{aicc, aicc_stop, bernoulli_aic_stop, oracle_stop, HatBackend, StoppingResult, StoppingRule};

/// Crate version, recorded in report headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
