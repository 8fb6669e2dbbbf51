use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::generate::{gen_contaminated, SimulationSpec};
use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::solvers::{fit_ls, fit_lts, fit_wls, FitConfig, FitResult};

/// The estimators a study can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Ls,
    Lts,
    Wls,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Lts, Estimator::Wls, Estimator::Ls];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::Lts => "lts",
            Estimator::Wls => "wls",
        }
    }

    pub fn fit(self, d: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
        match self {
            Estimator::Ls => fit_ls(d),
            Estimator::Lts => fit_lts(d, &cfg.lts),
            Estimator::Wls => fit_wls(d, cfg),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(Estimator::Ls),
            "lts" => Ok(Estimator::Lts),
            "wls" => Ok(Estimator::Wls),
            other => Err(Error::InvalidInput(format!("unknown estimator '{other}' (expected ls, lts or wls)"))),
        }
    }
}

/// `Σ‖tᵢ − β₀‖² / R`.
pub fn emse(fits: &[Coefficients], beta0: &Coefficients) -> Result<f64> {
    if fits.is_empty() {
        return Err(Error::InvalidInput("EMSE of an empty set of fits".into()));
    }
    if let Some(f) = fits.iter().find(|f| f.len() != beta0.len()) {
        return Err(Error::DimensionMismatch(format!(
            "fit of length {} scored against β₀ of length {}",
            f.len(),
            beta0.len()
        )));
    }
    let total: f64 = fits.iter().map(|t| (t.as_vector() - beta0.as_vector()).norm_squared()).sum();
    Ok(total / fits.len() as f64)
}

/// `EMSE(LS) / EMSE(procedure)`; NaN when both are zero.
pub fn relative_efficiency(emse_ls: f64, emse_proc: f64) -> f64 {
    if emse_proc == 0.0 && emse_ls == 0.0 {
        f64::NAN
    } else {
        emse_ls / emse_proc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorMetrics {
    pub estimator: Estimator,
    pub emse: f64,
    pub total_time: Duration,
    /// Relative to LS; NaN when undefined or when LS was not run.
    pub re: f64,
    pub fits: usize,
    pub failures: usize,
}

/// One study cell: metrics for every estimator on the same replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    pub replications: usize,
    pub rows: Vec<EstimatorMetrics>,
    /// False when more than 5% of the fits of some estimator failed.
    pub valid: bool,
}

impl MetricsReport {
    pub fn get(&self, e: Estimator) -> Option<&EstimatorMetrics> {
        self.rows.iter().find(|r| r.estimator == e)
    }

    pub const CSV_HEADER: &'static str = "p,n,epsilon,estimator,emse,tt_seconds,re";

    /// One row per estimator. With `timing == false` the wall-clock column is
    /// written as `NA` so the file depends only on the inputs.
    pub fn write_csv_rows<W: Write>(&self, mut out: W, timing: bool) -> io::Result<()> {
        for r in &self.rows {
            let tt = if timing { format!("{:.6}", r.total_time.as_secs_f64()) } else { "NA".to_string() };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.p,
                self.n,
                self.epsilon,
                r.estimator,
                fmt_full(r.emse),
                tt,
                fmt_full(r.re)
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits; `NaN` spelled as such.
pub fn fmt_full(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

struct ReplicateOutcome {
    fits: Vec<(std::result::Result<Coefficients, Error>, Duration)>,
}

fn run_replicate(spec: &SimulationSpec, estimators: &[Estimator], cfg: &FitConfig, rep: usize) -> Result<ReplicateOutcome> {
    let d = gen_contaminated(spec, rep)?;
    let mut cfg = cfg.clone();
    cfg.lts.seed = spec.replicate_seed(rep).rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15;
    let fits = estimators
        .iter()
        .map(|e| {
            let clock = Instant::now();
            let fit = e.fit(&d, &cfg).map(|f| f.beta);
            (fit, clock.elapsed())
        })
        .collect();
    Ok(ReplicateOutcome { fits })
}

/// Runs every estimator on `spec.replications` generated datasets.
///
/// Replicates run on `threads` workers; results are gathered in replicate
/// order, so the report does not depend on the thread count (apart from the
/// wall-clock totals).
pub fn run_study(spec: &SimulationSpec, estimators: &[Estimator], cfg: &FitConfig, threads: usize) -> Result<MetricsReport> {
    spec.validate()?;
    cfg.validate()?;
    if estimators.is_empty() {
        return Err(Error::InvalidInput("no estimators selected".into()));
    }
    let run = || -> Result<Vec<ReplicateOutcome>> {
        (0..spec.replications)
            .into_par_iter()
            .map(|rep| run_replicate(spec, estimators, cfg, rep))
            .collect()
    };
    let outcomes = if threads <= 1 {
        (0..spec.replications).map(|rep| run_replicate(spec, estimators, cfg, rep)).collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run)?
    };

    let beta0 = spec.beta0();
    let mut rows = Vec::with_capacity(estimators.len());
    let mut valid = true;
    for (k, &estimator) in estimators.iter().enumerate() {
        let mut betas = Vec::with_capacity(spec.replications);
        let mut total_time = Duration::ZERO;
        let mut failures = 0;
        for o in &outcomes {
            let (fit, elapsed) = &o.fits[k];
            total_time += *elapsed;
            match fit {
                Ok(b) if b.is_finite() => betas.push(b.clone()),
                _ => failures += 1,
            }
        }
        if failures * 20 > spec.replications {
            valid = false;
        }
        let value = if betas.is_empty() { f64::NAN } else { emse(&betas, &beta0)? };
        rows.push(EstimatorMetrics { estimator, emse: value, total_time, re: f64::NAN, fits: betas.len(), failures });
    }
    if let Some(ls) = rows.iter().find(|r| r.estimator == Estimator::Ls).map(|r| r.emse) {
        for r in &mut rows {
            r.re = relative_efficiency(ls, r.emse);
        }
    }
    Ok(MetricsReport { n: spec.n, p: spec.p, epsilon: spec.epsilon, replications: spec.replications, rows, valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emse_examples() {
        let b0 = Coefficients::zeros(2);
        assert_eq!(emse(&[b0.clone(), b0.clone()], &b0).unwrap(), 0.0);
        assert_eq!(emse(&[Coefficients::zeros(2), vec![2.0, 0.0].into()], &b0).unwrap(), 2.0);
        assert_eq!(emse(&[vec![1.0, 1.0].into()], &b0).unwrap(), 2.0);
        assert!(emse(&[], &b0).is_err());
        assert!(emse(&[vec![1.0].into()], &b0).is_err());
    }

    #[test]
    fn relative_efficiency_examples() {
        assert_eq!(relative_efficiency(2.0, 1.0), 2.0);
        assert!(relative_efficiency(0.0, 0.0).is_nan());
        assert_eq!(relative_efficiency(0.0, 41.543), 0.0);
    }

    #[test]
    fn ls_only_study_is_self_relative() {
        let spec = SimulationSpec::joint_normal(30, 3, 0.0, 5, 8);
        let report = run_study(&spec, &[Estimator::Ls], &FitConfig::default(), 1).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].re, 1.0);
        assert!(report.valid);
    }

    #[test]
    fn parallel_matches_serial() {
        let spec = SimulationSpec::joint_normal(30, 3, 0.1, 6, 21);
        let cfg = FitConfig { lts: crate::solvers::LtsConfig { n_starts: 50, ..Default::default() }, ..FitConfig::default() };
        let est = [Estimator::Lts, Estimator::Wls, Estimator::Ls];
        let a = run_study(&spec, &est, &cfg, 1).unwrap();
        let b = run_study(&spec, &est, &cfg, 3).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.emse.to_bits(), y.emse.to_bits());
            assert_eq!(x.re.to_bits(), y.re.to_bits());
        }
    }

    #[test]
    fn csv_rows() {
        let spec = SimulationSpec::joint_normal(20, 2, 0.0, 2, 1);
        let report = run_study(&spec, &[Estimator::Ls], &FitConfig::default(), 1).unwrap();
        let mut buf = Vec::new();
        report.write_csv_rows(&mut buf, false).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.starts_with("2,20,0,ls,"), "{line}");
        assert!(line.trim_end().ends_with(",NA,1.0000000000000000e0"), "{line}");
    }

    #[test]
    fn estimator_names_parse() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("lms".parse::<Estimator>().is_err());
    }
}
