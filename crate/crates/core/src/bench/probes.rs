//! Empirical checks of breakdown and of the three equivariance identities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::study::Estimator;
use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::solvers::FitConfig;

fn has_intercept(d: &Dataset) -> bool {
    d.design().column(0).iter().all(|&v| v == 1.0)
}

/// Contamination patterns tried by [`breakdown_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Rows become `(M, …, M, −M)`: huge carriers, response of opposite sign.
    Leverage,
    /// Carriers kept, response set to `M`.
    Vertical,
}

/// Replaces the first `m` observations of `d` according to `pattern`.
pub fn contaminate(d: &Dataset, m: usize, magnitude: f64, pattern: Pattern) -> Result<Dataset> {
    if m >= d.n() {
        return Err(Error::InvalidInput(format!("cannot replace {m} of {} observations", d.n())));
    }
    let mut design = d.design().clone();
    let mut y = d.y().clone();
    let first = usize::from(has_intercept(d));
    for i in 0..m {
        match pattern {
            Pattern::Leverage => {
                for j in first..d.p() {
                    design[(i, j)] = magnitude;
                }
                y[i] = -magnitude;
            }
            Pattern::Vertical => y[i] = magnitude,
        }
    }
    Dataset::from_design(design, y)
}

/// Largest `‖β̂(contaminated) − β̂(clean)‖` over the contamination patterns.
pub fn breakdown_probe(d: &Dataset, estimator: Estimator, cfg: &FitConfig, m: usize, magnitude: f64) -> Result<f64> {
    if m >= d.n() {
        return Err(Error::InvalidInput(format!("m = {m} must be below n = {}", d.n())));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let clean = estimator.fit(d, cfg)?.beta;
    let mut worst: f64 = 0.0;
    for pattern in [Pattern::Leverage, Pattern::Vertical] {
        let bad = contaminate(d, m, magnitude, pattern)?;
        let fit = estimator.fit(&bad, cfg)?.beta;
        worst = worst.max(fit.distance(&clean));
    }
    Ok(worst)
}

/// Largest scaled deviations from the three identities over all trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivarianceReport {
    /// `t(X, y + Xb) = t(X, y) + b`
    pub regression: f64,
    /// `t(X, s·y) = s·t(X, y)`
    pub scale: f64,
    /// `t(XA, y) = A⁻¹·t(X, y)`
    pub affine: f64,
}

/// `‖got − want‖∞ / (1 + ‖want‖∞)`.
pub fn scaled_deviation(got: &Coefficients, want: &DVector<f64>) -> f64 {
    (got.as_vector() - want).amax() / (1.0 + want.amax())
}

fn random_nonsingular(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = g * 0.5 + DMatrix::identity(p, p) * 2.0;
        let sv = a.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if cond.is_finite() && cond < 50.0 {
            return a;
        }
    }
}

/// Applies `trials` random regression, scale and affine transforms.
pub fn equivariance_probe(d: &Dataset, estimator: Estimator, cfg: &FitConfig, trials: usize, seed: u64) -> Result<EquivarianceReport> {
    let base = estimator.fit(d, cfg)?.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = d.p();
    let mut report = EquivarianceReport { regression: 0.0, scale: 0.0, affine: 0.0 };
    for _ in 0..trials {
        let b = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
        let shifted = d.with_response(d.y() + d.design() * &b)?;
        let fit = estimator.fit(&shifted, cfg)?.beta;
        report.regression = report.regression.max(scaled_deviation(&fit, &(base.as_vector() + &b)));

        let magnitude = rng.random_range(0.2..5.0);
        let s = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        let scaled = d.with_response(d.y() * s)?;
        let fit = estimator.fit(&scaled, cfg)?.beta;
        report.scale = report.scale.max(scaled_deviation(&fit, &(base.as_vector() * s)));

        let a = random_nonsingular(&mut rng, p);
        let a_inv = a.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular transform".into()))?;
        let moved = Dataset::from_design(d.design() * &a, d.y().clone())?;
        let fit = estimator.fit(&moved, cfg)?.beta;
        report.affine = report.affine.max(scaled_deviation(&fit, &(a_inv * base.as_vector())));
    }
    Ok(report)
}
