//! Least trimmed squares by random elemental starts and concentration steps.
//!
//! Each start fits the `p` points of a random subset exactly, then repeats
//! the C-step (refit least squares on the `h` observations with the smallest
//! squared residuals) until the retained subset stops changing. Every start
//! draws from its own ChaCha stream, so the outcome does not depend on the
//! order in which starts are evaluated.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ls::{fit_ls, solve_least_squares};
use super::FitResult;
use crate::data::Dataset;
use crate::error::{Error, Result};

const MAX_CSTEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LtsConfig {
    /// Coverage; `None` means `⌊(n+p+1)/2⌋`.
    pub h: Option<usize>,
    pub n_starts: usize,
    pub seed: u64,
    /// Singular elemental subsets are redrawn up to this many times per start.
    pub max_resamples: usize,
}

impl Default for LtsConfig {
    fn default() -> Self {
        Self { h: None, n_starts: 500, seed: 0, max_resamples: 50 }
    }
}

impl LtsConfig {
    pub fn coverage(&self, n: usize, p: usize) -> usize {
        self.h.unwrap_or((n + p + 1) / 2)
    }
}

/// A concentrated solution: its coefficients, trimmed objective and subset.
#[derive(Debug, Clone, PartialEq)]
pub struct LtsCandidate {
    pub beta: DVector<f64>,
    pub trimmed_objective: f64,
    pub subset: Vec<usize>,
    pub start: usize,
    pub csteps: usize,
    pub stable: bool,
}

fn smallest_h(d: &Dataset, beta: &DVector<f64>, h: usize) -> (Vec<usize>, f64) {
    let r = d.y() - d.design() * beta;
    let mut order: Vec<usize> = (0..d.n()).collect();
    order.sort_by(|&a, &b| (r[a] * r[a]).total_cmp(&(r[b] * r[b])).then(a.cmp(&b)));
    let mut subset = order[..h].to_vec();
    let objective = subset.iter().map(|&i| r[i] * r[i]).sum();
    subset.sort_unstable();
    (subset, objective)
}

fn concentrate(d: &Dataset, mut beta: DVector<f64>, h: usize, start: usize) -> LtsCandidate {
    let (mut subset, mut objective) = smallest_h(d, &beta, h);
    let mut csteps = 0;
    let mut stable = false;
    while csteps < MAX_CSTEPS {
        let design = d.design().select_rows(&subset);
        let y = d.y().select_rows(&subset);
        let Ok(next) = solve_least_squares(&design, &y) else {
            break;
        };
        csteps += 1;
        let (next_subset, next_objective) = smallest_h(d, &next, h);
        beta = next;
        objective = next_objective;
        if next_subset == subset {
            stable = true;
            break;
        }
        subset = next_subset;
    }
    LtsCandidate { beta, trimmed_objective: objective, subset, start, csteps, stable }
}

fn elemental_start(d: &Dataset, cfg: &LtsConfig, start: usize) -> Option<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start as u64);
    let (n, p) = (d.n(), d.p());
    for _ in 0..=cfg.max_resamples {
        let mut rows = rand::seq::index::sample(&mut rng, n, p).into_vec();
        rows.sort_unstable();
        let design = d.design().select_rows(&rows);
        let y = d.y().select_rows(&rows);
        if let Ok(beta) = solve_least_squares(&design, &y) {
            return Some(beta);
        }
    }
    None
}

fn validate(d: &Dataset, cfg: &LtsConfig) -> Result<usize> {
    let (n, p) = (d.n(), d.p());
    let h = cfg.coverage(n, p);
    if h < p || h > n {
        return Err(Error::InvalidInput(format!("LTS coverage h = {h} must satisfy p = {p} ≤ h ≤ n = {n}")));
    }
    if cfg.n_starts == 0 {
        return Err(Error::InvalidInput("LTS needs at least one start".into()));
    }
    Ok(h)
}

/// Up to `keep` distinct concentrated solutions, best trimmed objective first
/// (ties broken by the lowest start index).
pub fn lts_candidates(d: &Dataset, cfg: &LtsConfig, keep: usize) -> Result<Vec<LtsCandidate>> {
    let h = validate(d, cfg)?;
    if h == d.n() {
        let fit = fit_ls(d)?;
        let beta = fit.beta.into_vector();
        return Ok(vec![LtsCandidate {
            beta,
            trimmed_objective: fit.objective,
            subset: (0..d.n()).collect(),
            start: 0,
            csteps: 0,
            stable: true,
        }]);
    }
    let mut found: Vec<LtsCandidate> = Vec::new();
    let mut any_start = false;
    for start in 0..cfg.n_starts {
        let Some(beta) = elemental_start(d, cfg, start) else {
            continue;
        };
        any_start = true;
        let cand = concentrate(d, beta, h, start);
        if !cand.trimmed_objective.is_finite() || found.iter().any(|f| f.subset == cand.subset) {
            continue;
        }
        found.push(cand);
    }
    if !any_start {
        return Err(Error::RankDeficient { rank: crate::data::numerical_rank(d.design()), p: d.p() });
    }
    found.sort_by(|a, b| a.trimmed_objective.total_cmp(&b.trimmed_objective).then(a.start.cmp(&b.start)));
    found.truncate(keep.max(1));
    Ok(found)
}

/// Least trimmed squares: minimizes the sum of the `h` smallest squared residuals.
pub fn fit_lts(d: &Dataset, cfg: &LtsConfig) -> Result<FitResult> {
    let clock = Instant::now();
    let best = lts_candidates(d, cfg, 1)?.remove(0);
    let design = d.design().select_rows(&best.subset);
    let r = d.y().select_rows(&best.subset) - &design * &best.beta;
    let gradient = design.tr_mul(&r) * -2.0;
    Ok(FitResult {
        beta: best.beta.into(),
        objective: best.trimmed_objective,
        gradient_norm: gradient.norm(),
        iterations: best.csteps,
        converged: best.stable,
        wall_time: clock.elapsed(),
    })
}
