//! Subcommands and their flag sets.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use wlsreg::bench::{
    breakdown_probe, clean_line_data, equivariance_probe, run_study, Estimator, MetricsReport, Scheme, SimulationSpec,
};
use wlsreg::{
    check_general_position_hint, rbp_theoretical, residuals, Dataset, FitConfig, Initializer, LineSearch, LtsConfig,
    ScaleMode, WeightParams,
};

use crate::csvio::{fmt_full, parse_number_list, read_dataset, write_residuals, CsvError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Csv(#[from] CsvError),

    #[error("{0}")]
    Library(#[from] wlsreg::Error),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Io(#[from] io::Error),

    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit code for a fit that stopped before meeting the tolerance.
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "wlsreg", version, about = "Robust regression by exponentially weighted least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an estimator to a CSV file (last column is the response).
    Fit(FitArgs),
    /// Run a contaminated-data simulation study and write a metrics CSV.
    Simulate(SimulateArgs),
    /// Measure the coefficient deviation under adversarial replacements.
    Breakdown(BreakdownArgs),
    /// Check the regression, scale and affine equivariance identities.
    Equivariance(EquivarianceArgs),
    /// Tabulate w, w', w'' and psi over a grid.
    WeightsDump(WeightsDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Ls,
    Lts,
    Wls,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Ls => Estimator::Ls,
            EstimatorArg::Lts => Estimator::Lts,
            EstimatorArg::Wls => Estimator::Wls,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    /// Median of the squared responses.
    MedianY2,
    /// Median of the squared initial residuals.
    MedianResid2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LineSearchArg {
    Newton,
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Lts,
    Ls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Correlated normal (x, y) rows replaced by a fixed point.
    Joint,
    /// Linear model around --beta0 with normal errors.
    Fixed,
}

/// Estimator settings shared by the subcommands that fit.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Steepness of the weight function.
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    /// Cutoff of the weight function.
    #[arg(long, default_value_t = 100.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::MedianY2)]
    pub scale: ScaleArg,
    /// Replace a zero scale constant by a tiny positive value instead of failing.
    #[arg(long)]
    pub floor_scale: bool,
    /// Seed of the LTS random subsets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random elemental starts of FAST-LTS.
    #[arg(long, default_value_t = 500)]
    pub lts_starts: usize,
    /// LTS coverage h (default: floor((n+p+1)/2)).
    #[arg(long)]
    pub lts_h: Option<usize>,
    /// LTS candidates the WLS solver is started from.
    #[arg(long, default_value_t = 10)]
    pub wls_starts: usize,
    /// Gradient-norm tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Maximum number of restart cycles of the conjugate-gradient solver.
    #[arg(long, default_value_t = 50)]
    pub max_cycles: usize,
    #[arg(long, value_enum, default_value_t = LineSearchArg::Newton)]
    pub line_search: LineSearchArg,
    #[arg(long, value_enum, default_value_t = InitArg::Lts)]
    pub init: InitArg,
}

impl SolverArgs {
    pub fn config(&self) -> CliResult<FitConfig> {
        let cfg = FitConfig {
            weight_params: WeightParams::new(self.k, self.c)?,
            scale_mode: match self.scale {
                ScaleArg::MedianY2 => ScaleMode::MedianYSquared,
                ScaleArg::MedianResid2 => ScaleMode::MedianInitialResidualSquared,
            },
            tolerance: self.tol,
            max_outer_cycles: self.max_cycles,
            line_search: match self.line_search {
                LineSearchArg::Newton => LineSearch::NewtonStep,
                LineSearchArg::Backtracking => LineSearch::Backtracking,
            },
            initializer: match self.init {
                InitArg::Lts => Initializer::Lts,
                InitArg::Ls => Initializer::Ls,
            },
            starts: self.wls_starts,
            lts: LtsConfig { h: self.lts_h, n_starts: self.lts_starts, seed: self.seed, ..LtsConfig::default() },
            floor_scale: self.floor_scale,
            ..FitConfig::default()
        };
        cfg.validate()?;
        if cfg.lts.n_starts == 0 {
            return Err(CliError::Usage("--lts-starts must be at least 1".into()));
        }
        for w in cfg.weight_params.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Input CSV.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Wls)]
    pub estimator: EstimatorArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the residuals of the fit to this CSV.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Contamination fractions, comma separated.
    #[arg(long, default_value = "0,0.1,0.2")]
    pub eps: String,
    /// Common correlation of the joint scheme.
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Seed of the data generator; LTS seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Joint)]
    pub scheme: SchemeArg,
    /// True coefficients of the fixed scheme, comma separated (length p).
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<String>,
    /// Replacement point, comma separated (length p; last entry is y).
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Estimators to compare, comma separated.
    #[arg(long, default_value = "lts,wls,ls")]
    pub estimators: String,
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::MedianY2)]
    pub scale: ScaleArg,
    #[arg(long, default_value_t = 500)]
    pub lts_starts: usize,
    #[arg(long, default_value_t = 10)]
    pub wls_starts: usize,
    /// Worker threads for the replicates.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output CSV (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write NA in the timing column so the file depends only on the flags.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DataSource {
    /// Input CSV; generated clean line data when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Observations of the generated data.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Coefficients (including the intercept) of the generated data.
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Noise standard deviation of the generated data.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
}

impl DataSource {
    fn load(&self) -> CliResult<Dataset> {
        match &self.input {
            Some(path) => Ok(read_dataset(path)?),
            None => Ok(clean_line_data(self.n, self.p, self.noise, self.data_seed)?),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BreakdownArgs {
    #[command(flatten)]
    pub data: DataSource,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Wls)]
    pub estimator: EstimatorArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Replaced observations (default: floor((n-p)/2)).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1e6)]
    pub magnitude: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EquivarianceArgs {
    #[command(flatten)]
    pub data: DataSource,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Wls)]
    pub estimator: EstimatorArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Seed of the random transforms.
    #[arg(long, default_value_t = 0)]
    pub transform_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightsDumpArgs {
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    #[arg(long, default_value_t = 100.0)]
    pub c: f64,
    /// Scale constant used for psi.
    #[arg(long, default_value_t = 1.0)]
    pub cstar: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, default_value_t = 1000.0, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, default_value_t = 1001)]
    pub count: usize,
    /// Log-spaced grid (requires min > 0).
    #[arg(long)]
    pub log: bool,
    /// Output CSV (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// Runs one subcommand and returns its exit code.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> CliResult<u8> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Breakdown(a) => cmd_breakdown(a, out),
        Command::Equivariance(a) => cmd_equivariance(a, out),
        Command::WeightsDump(a) => cmd_weights_dump(a, out),
    }
}

pub fn cmd_fit<W: Write>(args: &FitArgs, out: &mut W) -> CliResult<u8> {
    let d = read_dataset(&args.input)?;
    let cfg = args.solver.config()?;
    let estimator = Estimator::from(args.estimator);
    let fit = match estimator.fit(&d, &cfg) {
        Ok(f) => f,
        Err(wlsreg::Error::RankDeficient { rank, p }) => {
            return Err(CliError::Usage(format!(
                "design fails the rank screen: numerical rank {rank} < p = {p}; remove collinear columns"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let hint = check_general_position_hint(&d);
    if !hint.passes {
        eprintln!("warning: {}", hint.diagnostic);
    }
    writeln!(out, "estimator: {estimator}")?;
    writeln!(out, "n: {}", d.n())?;
    writeln!(out, "p: {}", d.p())?;
    for (j, b) in fit.beta.as_slice().iter().enumerate() {
        writeln!(out, "beta[{j}]: {}", fmt_full(*b))?;
    }
    writeln!(out, "objective: {}", fmt_full(fit.objective))?;
    writeln!(out, "gradient_norm: {}", fmt_full(fit.gradient_norm))?;
    writeln!(out, "iterations: {}", fit.iterations)?;
    writeln!(out, "converged: {}", fit.converged)?;
    writeln!(out, "wall_time_seconds: {:.6}", fit.wall_time.as_secs_f64())?;
    if let Some(path) = &args.residuals {
        let r = residuals(&d, &fit.beta)?;
        let mut w = create(path)?;
        write_residuals(&mut w, r.as_slice())?;
        w.flush()?;
    }
    Ok(if fit.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn parse_estimators(list: &str) -> CliResult<Vec<Estimator>> {
    let mut out = Vec::new();
    for name in list.split(',').filter(|s| !s.trim().is_empty()) {
        let e: Estimator = name.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no estimators selected".into()));
    }
    Ok(out)
}

fn build_specs(args: &SimulateArgs) -> CliResult<Vec<SimulationSpec>> {
    let eps = parse_number_list(&args.eps)?;
    let point = args.point.as_deref().map(parse_number_list).transpose()?;
    let mut specs = Vec::with_capacity(eps.len());
    for e in eps {
        let mut spec = match args.scheme {
            SchemeArg::Joint => {
                if args.beta0.is_some() {
                    return Err(CliError::Usage("--beta0 applies to the fixed scheme only".into()));
                }
                if args.p == 0 {
                    return Err(CliError::Usage("--p must be at least 1".into()));
                }
                let mut s = SimulationSpec::joint_normal(args.n, args.p, e, args.reps, args.seed);
                s.rho = args.rho;
                s
            }
            SchemeArg::Fixed => {
                let beta0 = match &args.beta0 {
                    Some(b) => parse_number_list(b)?,
                    None => vec![1.0; args.p],
                };
                SimulationSpec::fixed_beta(args.n, beta0, e, args.reps, args.seed)
            }
        };
        if let Some(pt) = &point {
            match &mut spec.scheme {
                Scheme::JointNormalReplace { point } | Scheme::FixedBeta { point, .. } => *point = pt.clone(),
            }
        }
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}

pub fn cmd_simulate<W: Write>(args: &SimulateArgs, out: &mut W) -> CliResult<u8> {
    let specs = build_specs(args)?;
    let estimators = parse_estimators(&args.estimators)?;
    let cfg = FitConfig {
        weight_params: WeightParams::new(args.k, args.c)?,
        scale_mode: match args.scale {
            ScaleArg::MedianY2 => ScaleMode::MedianYSquared,
            ScaleArg::MedianResid2 => ScaleMode::MedianInitialResidualSquared,
        },
        starts: args.wls_starts,
        lts: LtsConfig { n_starts: args.lts_starts, ..LtsConfig::default() },
        ..FitConfig::default()
    };
    if args.lts_starts == 0 {
        return Err(CliError::Usage("--lts-starts must be at least 1".into()));
    }
    let mut reports = Vec::with_capacity(specs.len());
    for spec in &specs {
        reports.push(run_study(spec, &estimators, &cfg, args.threads.max(1))?);
    }

    let mut csv = Vec::new();
    writeln!(csv, "{}", MetricsReport::CSV_HEADER)?;
    for r in &reports {
        r.write_csv_rows(&mut csv, !args.no_timing)?;
    }
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(&csv)?;
            w.flush()?;
            write_summary(&reports, out)?;
        }
        None => out.write_all(&csv)?,
    }
    for r in reports.iter().filter(|r| !r.valid) {
        eprintln!("warning: more than 5% of the fits failed at epsilon = {}; cell marked invalid", r.epsilon);
    }
    Ok(0)
}

fn write_summary<W: Write>(reports: &[MetricsReport], out: &mut W) -> io::Result<()> {
    writeln!(out, "{:>4} {:>6} {:>8} {:>10} {:>12} {:>10} {:>10}", "p", "n", "eps", "procedure", "EMSE", "TT(s)", "RE")?;
    for r in reports {
        for row in &r.rows {
            writeln!(
                out,
                "{:>4} {:>6} {:>8.3} {:>10} {:>12.4} {:>10.3} {:>10.4}",
                r.p,
                r.n,
                r.epsilon,
                row.estimator,
                row.emse,
                row.total_time.as_secs_f64(),
                row.re
            )?;
        }
    }
    Ok(())
}

pub fn cmd_breakdown<W: Write>(args: &BreakdownArgs, out: &mut W) -> CliResult<u8> {
    let d = args.data.load()?;
    let cfg = args.solver.config()?;
    let m = args.m.unwrap_or(d.n().saturating_sub(d.p()) / 2);
    if !(args.magnitude.is_finite() && args.magnitude > 0.0) {
        return Err(CliError::Usage(format!("--magnitude must be positive, got {}", args.magnitude)));
    }
    let estimator = Estimator::from(args.estimator);
    let deviation = breakdown_probe(&d, estimator, &cfg, m, args.magnitude)?;
    let rbp = rbp_theoretical(d.n(), d.p())?;
    writeln!(out, "estimator: {estimator}")?;
    writeln!(out, "n: {}", d.n())?;
    writeln!(out, "p: {}", d.p())?;
    writeln!(out, "replaced: {m}")?;
    writeln!(out, "magnitude: {}", fmt_full(args.magnitude))?;
    writeln!(out, "deviation: {}", fmt_full(deviation))?;
    writeln!(out, "rbp_theoretical: {rbp} ({})", fmt_full(rbp.as_f64()))?;
    Ok(0)
}

pub fn cmd_equivariance<W: Write>(args: &EquivarianceArgs, out: &mut W) -> CliResult<u8> {
    let d = args.data.load()?;
    let cfg = args.solver.config()?;
    let estimator = Estimator::from(args.estimator);
    let r = equivariance_probe(&d, estimator, &cfg, args.trials, args.transform_seed)?;
    writeln!(out, "estimator: {estimator}")?;
    writeln!(out, "trials: {}", args.trials)?;
    writeln!(out, "regression: {}", fmt_full(r.regression))?;
    writeln!(out, "scale: {}", fmt_full(r.scale))?;
    writeln!(out, "affine: {}", fmt_full(r.affine))?;
    Ok(0)
}

/// Grid of `count` points from `min` to `max`, linear or logarithmic.
pub fn grid(min: f64, max: f64, count: usize, log: bool) -> CliResult<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(CliError::Usage(format!("grid needs finite min < max, got [{min}, {max}]")));
    }
    if count < 2 {
        return Err(CliError::Usage("grid needs at least 2 points".into()));
    }
    if log && min <= 0.0 {
        return Err(CliError::Usage("a log grid needs min > 0".into()));
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else if log {
                min * (max / min).powf(i as f64 / last)
            } else {
                min + (max - min) * (i as f64 / last)
            }
        })
        .collect())
}

pub fn cmd_weights_dump<W: Write>(args: &WeightsDumpArgs, out: &mut W) -> CliResult<u8> {
    let params = WeightParams::new(args.k, args.c)?;
    if !(args.cstar.is_finite() && args.cstar > 0.0) {
        return Err(CliError::Usage(format!("--cstar must be positive, got {}", args.cstar)));
    }
    let xs = grid(args.min, args.max, args.count, args.log)?;
    let mut buf = Vec::new();
    writeln!(buf, "x,w,w1,w2,psi")?;
    for x in xs {
        writeln!(
            buf,
            "{},{},{},{},{}",
            fmt_full(x),
            fmt_full(params.weight(x)),
            fmt_full(params.weight_d1(x)),
            fmt_full(params.weight_d2(x)),
            fmt_full(params.psi(args.cstar, x))
        )?;
    }
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => out.write_all(&buf)?,
    }
    Ok(0)
}
