//! The three estimators: least squares, least trimmed squares and the
//! weighted least squares conjugate-gradient solver.

mod ls;
mod lts;
mod wls;

use std::time::Duration;

pub use ls::{fit_ls, solve_least_squares};
pub use lts::{fit_lts, lts_candidates, LtsCandidate, LtsConfig};
pub use wls::{fit_wls, minimize_cg};

use crate::data::{Coefficients, ScaleMode};
use crate::error::{Error, Result};
use crate::weight::WeightParams;

/// Output of every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Coefficients,
    /// Value of the estimator's own objective at `beta`.
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

/// Step-length rule for the conjugate-gradient solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineSearch {
    /// `α = −∇Oᵀv / vᵀHv`, falling back to backtracking when the curvature
    /// is not positive or the step fails the sufficient-decrease test.
    #[default]
    NewtonStep,
    /// Backtracking from a unit step.
    Backtracking,
}

/// Where the conjugate-gradient iterations start.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initializer {
    /// The best distinct concentrated LTS candidates ([`FitConfig::starts`] of them).
    #[default]
    Lts,
    Ls,
    Given(Coefficients),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub weight_params: WeightParams,
    pub scale_mode: ScaleMode,
    /// Convergence threshold on `‖∇O‖`.
    pub tolerance: f64,
    pub max_outer_cycles: usize,
    pub line_search: LineSearch,
    /// Sufficient-decrease slope of the backtracking rule, in `(0, 0.5]`.
    pub armijo_slope: f64,
    /// Backtracking shrink factor, in `(0, 1)`.
    pub shrink: f64,
    pub initializer: Initializer,
    /// Number of LTS candidates the solver is started from; the lowest
    /// objective wins.
    pub starts: usize,
    pub lts: LtsConfig,
    /// Return the starting point instead of the solver output when the
    /// latter has the larger objective.
    pub keep_better_initializer: bool,
    /// Substitute a tiny positive `c*` instead of failing on a degenerate scale.
    pub floor_scale: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            weight_params: WeightParams::default(),
            scale_mode: ScaleMode::default(),
            tolerance: 1e-8,
            max_outer_cycles: 50,
            line_search: LineSearch::default(),
            armijo_slope: 0.3,
            shrink: 0.8,
            initializer: Initializer::default(),
            starts: 10,
            lts: LtsConfig::default(),
            keep_better_initializer: true,
            floor_scale: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_outer_cycles == 0 {
            return Err(Error::InvalidInput("max_outer_cycles must be at least 1".into()));
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope <= 0.5) {
            return Err(Error::InvalidInput(format!(
                "armijo slope must lie in (0, 0.5], got {}",
                self.armijo_slope
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if self.starts == 0 {
            return Err(Error::InvalidInput("starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A breakdown point `numerator / denominator`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BreakdownPoint {
    pub numerator: usize,
    pub denominator: usize,
}

impl BreakdownPoint {
    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl std::fmt::Display for BreakdownPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Replacement breakdown point of the weighted estimator for a sample in
/// general position: `⌊(n+1)/2⌋/n` when `p = 1`, `(⌊(n−p)/2⌋+1)/n` otherwise.
pub fn rbp_theoretical(n: usize, p: usize) -> Result<BreakdownPoint> {
    if p == 0 || n <= p {
        return Err(Error::InvalidInput(format!("breakdown point needs n > p ≥ 1, got n = {n}, p = {p}")));
    }
    let numerator = if p == 1 { (n + 1) / 2 } else { (n - p) / 2 + 1 };
    Ok(BreakdownPoint { numerator, denominator: n })
}
