//! Command-line front end: reads a TOML config, runs one command and writes
//! `report.json` plus any sample CSVs into the output directory.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 precondition not
//! met, 3 numerical failure.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::analyze::{self, AnalyzeError, HillPoint, Recurrence, SearchGrid};
use crate::model::RegimeModel;
use crate::oracle::{self, InversionOptions, OracleError};
use crate::simulate::{self, SeedInfo, SimError, StationarySample};
use crate::spectral;

pub use config::{RunConfig, RunSection, CONFIG_HELP, SCHEMA_VERSION};
pub use report::{emit_report, read_report, Overflow, RunReport, SimulationSummary, REPORT_FILE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let msg = e.to_string();
        match e {
            SimError::InvalidPlan(_) | SimError::InvalidStep { .. } => CliError::Config(format!("run.dt_max/run.epsilon_trunc: {msg}")),
            SimError::StateOutOfRange { .. } => CliError::Config(format!("run.i0: {msg}")),
            SimError::InvalidSampling(_) => CliError::Config(format!("run.burn_in/run.gap/run.horizon: {msg}")),
            SimError::NotPositiveRecurrent { .. } => CliError::Precondition(msg),
            SimError::NonFiniteState { .. } | SimError::Chain(_) | SimError::Quadrature(_) => CliError::Numerical(msg),
        }
    }
}

impl From<AnalyzeError> for CliError {
    fn from(e: AnalyzeError) -> Self {
        let msg = e.to_string();
        match e {
            AnalyzeError::PreconditionNotRecurrent(_) | AnalyzeError::PreconditionCondition(_) => CliError::Precondition(msg),
            AnalyzeError::PreconditionEpsilon { .. } => CliError::Precondition(format!("run.epsilon: {msg}")),
            AnalyzeError::PreconditionDelta(_) => CliError::Precondition(format!("run.delta: {msg}")),
            AnalyzeError::InvalidOrderStatistic { .. } => CliError::Config(format!("run.hill_k: {msg}")),
            _ => CliError::Numerical(msg),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::PreconditionAlphaSign { .. } => CliError::Precondition(format!("drift.alpha: {e}")),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "regime-ou",
    version,
    about = "Simulate and analyze regime-switching Levy-driven Ornstein-Uhlenbeck processes",
    after_long_help = CONFIG_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration (required)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `seed` in the config (default 0)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for report.json and CSV files
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism); never changes results
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Set a config key, e.g. `run.horizon=5`; repeatable
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the model and report its integrability conditions
    Validate,
    /// Recurrence and tail verdicts with the moment index (exit 2 if not positive recurrent)
    Classify,
    /// eta_p at run.p and the moment index kappa
    Kappa,
    /// Simulate run.n_paths trajectories to path.csv (path_NNNN.csv for several)
    Simulate,
    /// Approximately stationary draws to stationary.csv with tail statistics
    Stationary,
    /// Stationary CDF of an equal-regime model on [run.x_min, run.x_max] to cdf.csv
    Oracle,
    /// Kolmogorov-Smirnov distance between stationary draws and the inverted CDF
    OracleCompare,
    /// Numerical Lyapunov drift certificates
    Lyapunov,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Classify => "classify",
            Command::Kappa => "kappa",
            Command::Simulate => "simulate",
            Command::Stationary => "stationary",
            Command::Oracle => "oracle",
            Command::OracleCompare => "oracle-compare",
            Command::Lyapunov => "lyapunov",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome { exit_code, notice, .. }) => {
            if let Some(n) = notice {
                eprintln!("{n}");
            }
            exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Result of a command that produced a report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    pub notice: Option<String>,
}

/// Runs a parsed command on a worker pool of the requested size.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers: must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    pool.install(|| execute_in_pool(cli))
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config: a configuration file is required".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
    RunConfig::parse(&text, &cli.overrides)
}

fn execute_in_pool(cli: &Cli) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let mut cfg = load_config(cli)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    let model = cfg.model()?;
    let verdict = analyze::classify(&model)?;
    let spectral = spectral::spectral_report(&model, cfg.run.p).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut report = RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        config_echo: cfg.clone(),
        integrability: model.integrability(),
        verdict,
        spectral,
        simulation: None,
        tail_stats: None,
        drift_certificates: None,
        wall_clock_seconds: 0.0,
        sample_files: Vec::new(),
    };
    let out = cli.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("--out {}: {e}", out.display())))?;

    let mut exit_code = 0;
    let mut notice = None;
    match cli.command {
        Command::Validate | Command::Kappa => {}
        Command::Classify => {
            if report.verdict.recurrence != Recurrence::PositiveRecurrent {
                exit_code = 2;
                notice = Some(format!(
                    "precondition not met: tail classification needs a positive recurrent model, verdict was {:?}",
                    report.verdict.recurrence
                ));
            }
        }
        Command::Simulate => run_simulate(&cfg, &model, seed, out, &mut report)?,
        Command::Stationary => {
            let sample = stationary_sample(&cfg, &model, seed)?;
            write_csv(out, "stationary.csv", &mut report, |w| sample.write_csv(w))?;
            report.tail_stats = Some(tail_stats(&cfg, &sample.xs(), None)?);
        }
        Command::Oracle => {
            let (alpha, sigma) = fixed_regime(&model)?;
            let grid = x_grid(cfg.run.x_min, cfg.run.x_max, cfg.run.x_points)?;
            let table = invert(&model, alpha, sigma, &grid)?;
            write_csv(out, "cdf.csv", &mut report, |w| table.write_csv(w))?;
        }
        Command::OracleCompare => {
            let (alpha, sigma) = fixed_regime(&model)?;
            let sample = stationary_sample(&cfg, &model, seed)?;
            let xs = sample.xs();
            if xs.is_empty() {
                return Err(CliError::Config("run.n_draws: oracle-compare needs at least one draw".into()));
            }
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            let grid = x_grid(lo, hi.max(lo + 1e-9), cfg.run.x_points)?;
            let table = invert(&model, alpha, sigma, &grid)?;
            write_csv(out, "stationary.csv", &mut report, |w| sample.write_csv(w))?;
            write_csv(out, "cdf.csv", &mut report, |w| table.write_csv(w))?;
            report.tail_stats = Some(tail_stats(&cfg, &xs, Some(&table))?);
        }
        Command::Lyapunov => {
            let d = report.verdict.drift_index;
            let grid = SearchGrid {
                min_abs: cfg.run.grid_min_abs,
                max_abs: cfg.run.grid_max_abs,
                points_per_decade: cfg.run.grid_points_per_decade,
            };
            if !(grid.min_abs > 0.0 && grid.max_abs > grid.min_abs && grid.points_per_decade > 0) {
                return Err(CliError::Config(
                    "run.grid_min_abs/run.grid_max_abs/run.grid_points_per_decade: need 0 < min < max and a positive density".into(),
                ));
            }
            let epsilon = cfg.run.epsilon.unwrap_or(0.5 * d.abs());
            let cert = if d < -analyze::DRIFT_TOL {
                analyze::verify_log_drift(&model, epsilon, grid)?
            } else if d > analyze::DRIFT_TOL {
                analyze::verify_reciprocal_drift(&model, cfg.run.delta, epsilon, grid)?
            } else {
                return Err(CliError::Precondition(
                    "drift index is zero; neither drift certificate applies".into(),
                ));
            };
            report.drift_certificates = Some(vec![cert]);
        }
    }
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    let files = emit_report(&report, out)?;
    Ok(Outcome {
        report,
        files,
        exit_code,
        notice,
    })
}

fn write_csv<F>(dir: &Path, name: &str, report: &mut RunReport, write: F) -> Result<(), CliError>
where
    F: FnOnce(std::io::BufWriter<std::fs::File>) -> csv::Result<()>,
{
    let path = dir.join(name);
    let file = std::fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write(std::io::BufWriter::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    report.sample_files.push(name.to_string());
    Ok(())
}

fn run_simulate(cfg: &RunConfig, model: &RegimeModel, seed: u64, out: &Path, report: &mut RunReport) -> Result<(), CliError> {
    let r = &cfg.run;
    let paths = simulate::simulate_batch(model, r.x0, r.i0, r.horizon, &cfg.plan(), seed, r.n_paths)?;
    let mut summary = SimulationSummary {
        n_paths: r.n_paths,
        completed: 0,
        overflows: Vec::new(),
    };
    for (k, result) in paths.into_iter().enumerate() {
        match result {
            Ok(path) => {
                let name = if r.n_paths == 1 {
                    "path.csv".to_string()
                } else {
                    format!("path_{k:04}.csv")
                };
                write_csv(out, &name, report, |w| path.write_csv(w))?;
                summary.completed += 1;
            }
            Err(e) => match SimulationSummary::overflow(k, &e) {
                Some(o) => summary.overflows.push(o),
                None => return Err(e.into()),
            },
        }
    }
    report.simulation = Some(summary);
    Ok(())
}

fn stationary_sample(cfg: &RunConfig, model: &RegimeModel, seed: u64) -> Result<StationarySample, CliError> {
    let r = &cfg.run;
    let burn_in = match r.burn_in {
        Some(b) => b,
        None => {
            let d = analyze::drift_index(model).map_err(|e| CliError::Numerical(e.to_string()))?;
            if d.abs() > analyze::DRIFT_TOL {
                20.0 / d.abs()
            } else {
                20.0
            }
        }
    };
    let seed = SeedInfo {
        master_seed: seed,
        stream: 0,
    };
    Ok(simulate::sample_stationary(
        model,
        burn_in,
        r.n_draws,
        r.gap,
        &cfg.plan(),
        seed,
        r.allow_non_recurrent,
    )?)
}

fn tail_stats(cfg: &RunConfig, xs: &[f64], reference: Option<&oracle::CdfTable>) -> Result<analyze::TailStats, CliError> {
    let mut stats = analyze::tail_stats(xs, &cfg.run.p_list, &cfg.run.lambdas, reference);
    if let Some(k) = cfg.run.hill_k {
        let mut abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        let index = analyze::hill_tail_index(&abs, k)?;
        if !stats.hill_estimates.iter().any(|h| h.k == k) {
            stats.hill_estimates.push(HillPoint { k, index });
            stats.hill_estimates.sort_by_key(|h| h.k);
        }
    }
    Ok(stats)
}

fn fixed_regime(model: &RegimeModel) -> Result<(f64, f64), CliError> {
    if !model.is_equal_regime() {
        return Err(CliError::Precondition(
            "drift.alpha/noise.sigma: this command needs the same alpha and sigma in every state".into(),
        ));
    }
    Ok((model.alpha()[0], model.sigma()[0]))
}

fn x_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(points >= 2 && lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Config(format!(
            "run.x_min/run.x_max/run.x_points: need x_min < x_max and at least 2 points, got [{lo}, {hi}] with {points}"
        )));
    }
    Ok((0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect())
}

fn invert(model: &RegimeModel, alpha: f64, sigma: f64, grid: &[f64]) -> Result<oracle::CdfTable, CliError> {
    if alpha >= 0.0 {
        return Err(CliError::Precondition(format!(
            "drift.alpha: the stationary law needs alpha < 0, got {alpha}"
        )));
    }
    let triplet = *model.triplet();
    Ok(oracle::invert_to_cdf(
        |z| oracle::stationary_cf(z, alpha, sigma, &triplet),
        grid,
        InversionOptions::default(),
    )?)
}
