//! Nonlinear conjugate gradient (Fletcher–Reeves) on the weighted objective.
//!
//! One outer cycle starts from the steepest-descent direction and performs
//! at most `p` line searches, updating
//! `v ← −∇O(βᵏ⁺¹) + (‖∇O(βᵏ⁺¹)‖² / ‖∇O(βᵏ)‖²)·v`. The direction is then
//! reset and the next cycle begins from the last iterate. Every accepted step
//! satisfies the sufficient-decrease test, so the objective never increases.

use std::time::Instant;

use nalgebra::DVector;

use super::lts::lts_candidates;
use super::{fit_ls, FitConfig, FitResult, Initializer, LineSearch};
use crate::data::{check_general_position_hint, compute_cstar, floored_cstar, Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::objective::ObjectiveContext;

const MAX_BACKTRACKS: usize = 200;

/// Outcome of [`minimize_cg`] from one starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub beta: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
}

struct Step {
    beta: DVector<f64>,
    value: f64,
}

fn backtrack(
    ctx: &ObjectiveContext<'_>,
    beta: &DVector<f64>,
    value: f64,
    slope: f64,
    v: &DVector<f64>,
    mut t: f64,
    cfg: &FitConfig,
) -> Result<Option<Step>> {
    for _ in 0..MAX_BACKTRACKS {
        let trial = beta + v * t;
        let f = ctx.value(&Coefficients::from(trial.clone()))?;
        if f.is_finite() && f <= value + cfg.armijo_slope * t * slope {
            return Ok(Some(Step { beta: trial, value: f }));
        }
        t *= cfg.shrink;
    }
    Ok(None)
}

fn line_search(
    ctx: &ObjectiveContext<'_>,
    beta: &DVector<f64>,
    value: f64,
    slope: f64,
    v: &DVector<f64>,
    cfg: &FitConfig,
) -> Result<Option<Step>> {
    let mut t0 = 1.0;
    if cfg.line_search == LineSearch::NewtonStep {
        let curvature = ctx.curvature(&Coefficients::from(beta.clone()), v)?;
        if curvature.is_finite() && curvature > 0.0 {
            t0 = -slope / curvature;
        }
    }
    backtrack(ctx, beta, value, slope, v, t0, cfg)
}

/// Runs the conjugate-gradient iterations from `start`.
pub fn minimize_cg(ctx: &ObjectiveContext<'_>, start: &Coefficients, cfg: &FitConfig) -> Result<CgOutcome> {
    let p = start.len();
    let mut beta = start.as_vector().clone();
    let (mut value, mut grad) = ctx.value_and_gradient(start)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("objective at the starting point".into()));
    }
    let mut iterations = 0;
    let mut trace = vec![value];
    let done = |beta: DVector<f64>, value: f64, grad: &DVector<f64>, iterations: usize, converged: bool, trace: Vec<f64>| {
        CgOutcome { beta, value, gradient_norm: grad.norm(), iterations, converged, trace }
    };
    if grad.norm() < cfg.tolerance {
        return Ok(done(beta, value, &grad, 0, true, trace));
    }

    for _cycle in 0..cfg.max_outer_cycles {
        let mut v = -&grad;
        let mut progressed = false;
        for k in 0..p {
            let mut slope = grad.dot(&v);
            if !(slope < 0.0) {
                v = -&grad;
                slope = -grad.norm_squared();
            }
            let Some(step) = line_search(ctx, &beta, value, slope, &v, cfg)? else {
                break;
            };
            iterations += 1;
            let (new_value, new_grad) = ctx.value_and_gradient(&Coefficients::from(step.beta.clone()))?;
            debug_assert_eq!(new_value, step.value);
            let moved = step.beta != beta;
            progressed |= moved;
            let ratio = new_grad.norm_squared() / grad.norm_squared();
            beta = step.beta;
            value = new_value;
            grad = new_grad;
            trace.push(value);
            if grad.norm() < cfg.tolerance {
                return Ok(done(beta, value, &grad, iterations, true, trace));
            }
            if k + 1 == p || !moved {
                break;
            }
            v = -&grad + v * ratio;
        }
        if !progressed {
            break;
        }
    }
    Ok(done(beta, value, &grad, iterations, false, trace))
}

fn starting_points(d: &Dataset, cfg: &FitConfig) -> Result<Vec<Coefficients>> {
    match &cfg.initializer {
        Initializer::Ls => Ok(vec![fit_ls(d)?.beta]),
        Initializer::Given(b) => {
            if b.len() != d.p() {
                return Err(Error::DimensionMismatch(format!(
                    "initial coefficients have length {}, design has p = {}",
                    b.len(),
                    d.p()
                )));
            }
            Ok(vec![b.clone()])
        }
        Initializer::Lts => Ok(lts_candidates(d, &cfg.lts, cfg.starts)?
            .into_iter()
            .map(|c| Coefficients::from(c.beta))
            .collect()),
    }
}

/// The weighted least squares estimate.
///
/// `c*` is resolved once, from the responses or from the residuals of the
/// best starting point, and stays fixed for the whole run. The solver is run
/// from every starting point and the lowest objective is returned.
pub fn fit_wls(d: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    let clock = Instant::now();
    cfg.validate()?;
    let hint = check_general_position_hint(d);
    if !hint.passes {
        return Err(Error::RankDeficient { rank: hint.rank, p: d.p() });
    }
    let starts = starting_points(d, cfg)?;
    let cstar = match compute_cstar(d, cfg.scale_mode, starts.first()) {
        Err(Error::DegenerateScale(c)) if cfg.floor_scale => floored_cstar(d, c),
        other => other?,
    };
    let ctx = ObjectiveContext::new(d, cfg.weight_params, cstar)?;

    let mut best: Option<CgOutcome> = None;
    for start in &starts {
        let mut outcome = minimize_cg(&ctx, start, cfg)?;
        if cfg.keep_better_initializer {
            let (v0, g0) = ctx.value_and_gradient(start)?;
            if v0 < outcome.value {
                outcome = CgOutcome {
                    beta: start.as_vector().clone(),
                    value: v0,
                    gradient_norm: g0.norm(),
                    iterations: outcome.iterations,
                    converged: g0.norm() < cfg.tolerance,
                    trace: vec![v0],
                };
            }
        }
        if best.as_ref().is_none_or(|b| outcome.value < b.value) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one starting point");
    Ok(FitResult {
        beta: best.beta.into(),
        objective: best.value,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        converged: best.converged,
        wall_time: clock.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScaleMode;
    use crate::weight::WeightParams;

    fn seven_points() -> Dataset {
        let pts = [(0.0, 4.0), (0.5, 4.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0), (5.0, 5.0)];
        let x: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        Dataset::from_rows(&x, &y).unwrap()
    }

    fn quadratic_data() -> Dataset {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 4.0, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, r)| 1.0 + 0.5 * r[0] - r[1] + 0.1 * ((i * 13) % 7) as f64).collect();
        Dataset::from_rows(&x, &y).unwrap()
    }

    #[test]
    fn quadratic_region_matches_least_squares() {
        let d = quadratic_data();
        let ls = fit_ls(&d).unwrap();
        for init in [Initializer::Lts, Initializer::Given(Coefficients::zeros(3))] {
            for line_search in [LineSearch::NewtonStep, LineSearch::Backtracking] {
                let cfg = FitConfig { initializer: init.clone(), line_search, max_outer_cycles: 200, ..FitConfig::default() };
                let fit = fit_wls(&d, &cfg).unwrap();
                assert!(fit.beta.distance(&ls.beta) < 1e-6, "{line_search:?} {:?}", fit.beta);
            }
        }
    }

    #[test]
    fn newton_step_solves_quadratic_in_p_steps() {
        let d = quadratic_data();
        let cfg = FitConfig { initializer: Initializer::Given(Coefficients::zeros(3)), ..FitConfig::default() };
        let fit = fit_wls(&d, &cfg).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 6, "took {} iterations", fit.iterations);
    }

    #[test]
    fn seven_point_slope() {
        let d = seven_points();
        let cfg = FitConfig { weight_params: WeightParams::new(5.0, 0.1).unwrap(), ..FitConfig::default() };
        let fit = fit_wls(&d, &cfg).unwrap();
        assert!((fit.beta[1] - 1.0).abs() < 0.15, "{:?}", fit.beta);
        let ls = fit_ls(&d).unwrap();
        assert!((ls.beta[1] - 1.0).abs() > 0.3);
    }

    #[test]
    fn never_worse_than_initializer() {
        let d = seven_points();
        for b0 in [vec![2.6, 0.3], vec![-1.0, 2.0], vec![0.0, 0.0]] {
            let init: Coefficients = b0.into();
            let cfg = FitConfig {
                weight_params: WeightParams::new(5.0, 0.5).unwrap(),
                initializer: Initializer::Given(init.clone()),
                ..FitConfig::default()
            };
            let fit = fit_wls(&d, &cfg).unwrap();
            let ctx = ObjectiveContext::new(&d, cfg.weight_params, 16.0).unwrap();
            assert!(fit.objective <= ctx.value(&init).unwrap());
        }
    }

    #[test]
    fn degenerate_scale_refused_unless_floored() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let cfg = FitConfig { initializer: Initializer::Ls, ..FitConfig::default() };
        assert_eq!(fit_wls(&d, &cfg).unwrap_err(), Error::DegenerateScale(0.0));
        let cfg = FitConfig { floor_scale: true, ..cfg };
        assert!(fit_wls(&d, &cfg).unwrap().beta.is_finite());
    }

    #[test]
    fn residual_scale_mode_uses_initializer() {
        let d = quadratic_data();
        let cfg = FitConfig { scale_mode: ScaleMode::MedianInitialResidualSquared, ..FitConfig::default() };
        let fit = fit_wls(&d, &cfg).unwrap();
        assert!(fit.beta.is_finite());
    }

    #[test]
    fn rank_deficient_design_rejected() {
        let d = Dataset::from_rows(&[vec![1.0], vec![1.0], vec![1.0]], &[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(fit_wls(&d, &FitConfig::default()), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn given_initializer_dimension_checked() {
        let d = seven_points();
        let cfg = FitConfig { initializer: Initializer::Given(Coefficients::zeros(3)), ..FitConfig::default() };
        assert!(matches!(fit_wls(&d, &cfg), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn accepted_objectives_never_increase() {
        let d = seven_points();
        for c in [0.1, 0.5, 3.0] {
            let params = WeightParams::new(5.0, c).unwrap();
            let ctx = ObjectiveContext::new(&d, params, 16.0).unwrap();
            for start in [vec![2.6, 0.3], vec![-3.0, 4.0], vec![10.0, -10.0]] {
                let cfg = FitConfig { weight_params: params, ..FitConfig::default() };
                let out = minimize_cg(&ctx, &start.into(), &cfg).unwrap();
                assert!(out.trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", out.trace);
            }
        }
    }

    #[test]
    fn deterministic() {
        let d = seven_points();
        let cfg = FitConfig { weight_params: WeightParams::new(5.0, 0.1).unwrap(), ..FitConfig::default() };
        let a = fit_wls(&d, &cfg).unwrap();
        let b = fit_wls(&d, &cfg).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.iterations, b.iterations);
    }
}
