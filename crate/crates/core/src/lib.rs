//! Robust linear regression by exponentially down-weighted least squares.
//!
//! The estimator minimizes `Σ w(rᵢ²/c*)·rᵢ²`, where `w` is exactly one for
//! small scaled squared residuals and decays exponentially above a cutoff.
//! The objective is smooth, so it is minimized with a nonlinear conjugate
//! gradient method started from a least trimmed squares fit.
//!
//! Modules:
//! - [`data`]: datasets, coefficients, residuals and the scale constant `c*`.
//! - [`weight`]: the weight function, its derivatives and the penalized square.
//! - [`objective`]: objective value, analytic gradient and Hessian.
//! - [`solvers`]: least squares, least trimmed squares and the weighted solver.
//! - [`bench`]: Monte-Carlo study harness, breakdown and equivariance probes.

pub mod bench;
pub mod data;
pub mod error;
pub mod objective;
pub mod solvers;
pub mod weight;

pub use data::{
    check_general_position_hint, compute_cstar, residuals, Coefficients, Dataset,
    GeneralPositionHint, ScaleMode,
};
pub use error::{Error, Result};
pub use objective::ObjectiveContext;
pub use solvers::{
    fit_ls, fit_lts, fit_wls, rbp_theoretical, FitConfig, FitResult, Initializer, LineSearch,
    LtsConfig,
};
pub use weight::WeightParams;
