//! Command-line front end: argument parsing, wiring and atomic output.
//!
//! Exit codes: `0` success, `1` invalid input or arguments, `2` numerical
//! failure inside a solver. Set `COVCRAFT_THREADS` to cap worker threads
//! (`0` or unset: one per core).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::backtest::{compare_estimators, run_backtests, BacktestConfig, BacktestError};
use crate::estimators::{
    combine, identity_target, linear_shrinkage, mp_clean, sample_covariance, shrinkage_intensity,
    shrinkage_target_f, CombinationWeights, CovarianceEstimate, EstimateMeta, EstimatorError,
    EstimatorKind,
};
use crate::market_data::{demean, load_panel, PanelError, ReturnsPanel};
use crate::portfolio::{annualize_risk, forecast_returns, min_variance, PortfolioError};
use crate::rmt::{mp_bounds, mp_density, MpParams, RmtError};
use crate::spectral::SpectralError;
use crate::synthetic::{build_population, frobenius_error, sample_panel, Innovation, SpikeSpec, SyntheticError};
use crate::tuning::{oracle_weights, tune_weights, GridSpec, TuningError};

#[derive(Debug, Parser)]
#[command(name = "covcraft", version, about = "Covariance estimation, minimum-variance portfolios and rolling backtests")]
pub struct Cli {
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a covariance matrix from a returns CSV and write it as CSV.
    Estimate(EstimateArgs),
    /// Solve the long-only minimum-variance portfolio.
    Portfolio(PortfolioArgs),
    /// Grid-search the combination weights (theta, phi) on a validation split.
    Tune(TuneArgs),
    /// Rolling-window out-of-sample comparison of estimators.
    Backtest(BacktestArgs),
    /// Marchenko-Pastur density on its support, as CSV.
    MpDensity(MpDensityArgs),
    /// Frobenius errors of each estimator on synthetic NULL/SPIKE panels.
    SynthEval(SynthEvalArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid resolution for theta and phi.
    #[arg(long, default_value_t = 0.02)]
    grid_step: f64,
    /// Share of the training window held out for validation.
    #[arg(long, default_value_t = 0.25)]
    validation: f64,
}

#[derive(Debug, Args)]
struct WeightArgs {
    /// Fixed theta for the combined estimator (requires --phi; skips tuning).
    #[arg(long, requires = "phi")]
    theta: Option<f64>,
    /// Fixed phi for the combined estimator (requires --theta).
    #[arg(long, requires = "theta")]
    phi: Option<f64>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Returns CSV: `date,ASSET1,...` header, one row per day.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    estimator: EstimatorKind,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Annual return target used when tuning shrink/combined.
    #[arg(long, default_value_t = 0.10)]
    annual_return: f64,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PortfolioArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    estimator: EstimatorKind,
    /// Minimum annual return (compounded daily over 365 days).
    #[arg(long, default_value_t = 0.10)]
    annual_return: f64,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Weights CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Risk JSON path (stdout if omitted).
    #[arg(long)]
    risk_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.10)]
    annual_return: f64,
    /// Grid surface CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Training window length in days.
    #[arg(long, default_value_t = 200)]
    train: usize,
    /// Comma-separated rebalance periods in days.
    #[arg(long, value_delimiter = ',', default_value = "30,60,90")]
    rebalance: Vec<usize>,
    #[arg(long, default_value_t = 0.10)]
    annual_return: f64,
    /// Comma-separated estimators.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "scm,identity,f,shrink,mp,combined")]
    estimators: Vec<EstimatorKind>,
    #[command(flatten)]
    grid: GridArgs,
    /// Report JSON path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MpDensityArgs {
    /// Dimensionality constant M/N in (0, 1).
    #[arg(long)]
    c: f64,
    /// Entry variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Number of evenly spaced points including both bounds.
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthEvalArgs {
    #[arg(long, value_parser = ["null", "spike"], default_value = "spike")]
    model: String,
    /// Number of assets.
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Number of days per panel.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Comma-separated spike eigenvalues (ignored for the null model).
    #[arg(long, value_delimiter = ',', default_value = "10")]
    spikes: Vec<f64>,
    /// `gaussian` or `tNU` (e.g. `t3`).
    #[arg(long, default_value = "gaussian", value_parser = parse_dist)]
    dist: Innovation,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// First seed; seeds run `seed_base..seed_base + seeds`.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value_t = 1.0)]
    base_variance: f64,
    #[arg(long, default_value_t = 0.0)]
    ar1: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<EstimatorKind, String> {
    s.parse()
}

fn parse_dist(s: &str) -> Result<Innovation, String> {
    if s == "gaussian" {
        return Ok(Innovation::Gaussian);
    }
    s.strip_prefix('t')
        .and_then(|nu| nu.parse::<f64>().ok())
        .map(|nu| Innovation::StudentT { nu })
        .ok_or_else(|| format!("unknown distribution {s:?} (expected gaussian or tNU)"))
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

fn spectral_class(e: &SpectralError) -> bool {
    matches!(e, SpectralError::NoConvergence { .. })
}

impl From<PanelError> for CliError {
    fn from(e: PanelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<RmtError> for CliError {
    fn from(e: RmtError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match &e {
            EstimatorError::Spectral(s) if spectral_class(s) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<PortfolioError> for CliError {
    fn from(e: PortfolioError) -> Self {
        match &e {
            PortfolioError::NotPsd { .. } => CliError::Numerical(e.to_string()),
            PortfolioError::Spectral(s) if spectral_class(s) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<TuningError> for CliError {
    fn from(e: TuningError) -> Self {
        match e {
            TuningError::Estimator(e) => e.into(),
            TuningError::Portfolio(e) => e.into(),
            TuningError::Spectral(ref s) if spectral_class(s) => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        match e {
            BacktestError::Estimator(e) => e.into(),
            BacktestError::Portfolio(e) => e.into(),
            BacktestError::Tuning(e) => e.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        match &e {
            SyntheticError::NotPsd(_) => CliError::Numerical(e.to_string()),
            SyntheticError::Spectral(s) if spectral_class(s) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    let threads = std::env::var("COVCRAFT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    // a second call in the same process keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let log = |msg: &str| {
        if cli.verbose {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Estimate(a) => {
            let panel = load_panel(&a.input)?;
            log(&format!("loaded {} assets x {} days", panel.n_assets(), panel.n_days()));
            let grid = GridSpec::new(a.grid.grid_step, a.grid.validation)?;
            let est = build_estimate(&panel, a.estimator, &a.weights, grid, a.annual_return)?;
            emit(a.out.as_deref(), matrix_csv(&panel, &est))
        }
        Command::Portfolio(a) => {
            let panel = load_panel(&a.input)?;
            let grid = GridSpec::new(a.grid.grid_step, a.grid.validation)?;
            let est = build_estimate(&panel, a.estimator, &a.weights, grid, a.annual_return)?;
            let fc = forecast_returns(&panel, a.annual_return);
            let alloc = min_variance(&est, &fc)?;
            let w = alloc.portfolio.weights();
            let mut csv = String::from("asset,weight\n");
            for (name, v) in panel.assets().iter().zip(w.iter()) {
                csv.push_str(&format!("{name},{v:?}\n"));
            }
            let risk = RiskReport {
                estimator: a.estimator,
                params: est.meta(),
                daily_variance: alloc.variance,
                annualized_risk_pct: annualize_risk(alloc.variance.max(0.0))?,
                expected_daily_return: fc.g.dot(w),
                r_daily: fc.r_daily,
                annual_return: a.annual_return,
                grid,
                iterations: alloc.iterations,
                kkt_residual: alloc.kkt_residual,
                warnings: alloc.warnings.iter().map(ToString::to_string).collect(),
            };
            emit(a.out.as_deref(), csv)?;
            emit(a.risk_out.as_deref(), to_json(&risk))
        }
        Command::Tune(a) => {
            let panel = load_panel(&a.input)?;
            let grid = GridSpec::new(a.grid.grid_step, a.grid.validation)?;
            let fc = forecast_returns(&panel, a.annual_return);
            let outcome = tune_weights(&panel, &fc, grid)?;
            log(&format!(
                "selected theta={} phi={}",
                outcome.weights.theta(),
                outcome.weights.phi()
            ));
            let mut csv = String::from("theta,phi,validation_variance,selected\n");
            for p in &outcome.surface {
                let selected = p.theta == outcome.weights.theta() && p.phi == outcome.weights.phi();
                csv.push_str(&format!(
                    "{:?},{:?},{:?},{}\n",
                    p.theta,
                    p.phi,
                    p.validation_variance,
                    u8::from(selected)
                ));
            }
            emit(a.out.as_deref(), csv)
        }
        Command::Backtest(a) => {
            let panel = load_panel(&a.input)?;
            let grid = GridSpec::new(a.grid.grid_step, a.grid.validation)?;
            if a.rebalance.is_empty() {
                return Err(CliError::Invalid("--rebalance needs at least one period".into()));
            }
            let mut runs = Vec::new();
            let mut ranking = Vec::new();
            let cfg = BacktestConfig {
                train_len: a.train,
                rebalance_every: a.rebalance[0],
                annual_return_target: a.annual_return,
                estimators: a.estimators.clone(),
                grid,
            };
            log(&format!("backtest: rebalance periods {:?}", a.rebalance));
            for report in run_backtests(&panel, &cfg, &a.rebalance)? {
                ranking.extend(compare_estimators(&report));
                runs.extend(report.estimators);
            }
            let doc = BacktestDocument {
                config: BacktestDocConfig {
                    input: a.input.display().to_string(),
                    train_len: a.train,
                    rebalance: a.rebalance.clone(),
                    annual_return_target: a.annual_return,
                    estimators: a.estimators.clone(),
                    grid,
                    annualization_days: crate::portfolio::DAYS_PER_YEAR,
                },
                estimators: runs,
                ranking,
            };
            emit(a.out.as_deref(), to_json(&doc))
        }
        Command::MpDensity(a) => {
            let params = MpParams::new(a.c, a.sigma2)?;
            if a.points < 2 {
                return Err(CliError::Invalid("--points must be at least 2".into()));
            }
            let b = mp_bounds(params);
            let mut csv = String::from("x,density\n");
            for k in 0..a.points {
                let x = if k + 1 == a.points {
                    b.upper
                } else {
                    b.lower + (b.upper - b.lower) * k as f64 / (a.points - 1) as f64
                };
                csv.push_str(&format!("{x:?},{:?}\n", mp_density(x, params)));
            }
            emit(a.out.as_deref(), csv)
        }
        Command::SynthEval(a) => emit(a.out.as_deref(), synth_eval(a, &log)?),
    }
}

fn build_estimate(
    panel: &ReturnsPanel,
    kind: EstimatorKind,
    weights: &WeightArgs,
    grid: GridSpec,
    annual_return: f64,
) -> Result<CovarianceEstimate, CliError> {
    let (centered, _) = demean(panel);
    let scm = sample_covariance(&centered)?;
    let fc = forecast_returns(panel, annual_return);
    Ok(match kind {
        EstimatorKind::Scm => scm,
        EstimatorKind::IdentityTarget => identity_target(&scm),
        EstimatorKind::FTarget => shrinkage_target_f(&scm),
        EstimatorKind::Mp => mp_clean(&scm, panel.dimensionality())?,
        EstimatorKind::Shrink => {
            let rho = shrinkage_intensity(panel, &fc, grid.validation_fraction())?;
            linear_shrinkage(&scm, &shrinkage_target_f(&scm), rho)?
        }
        EstimatorKind::Combined => {
            let w = match (weights.theta, weights.phi) {
                (Some(t), Some(p)) => CombinationWeights::new(t, p)?,
                _ => tune_weights(panel, &fc, grid)?.weights,
            };
            let f = shrinkage_target_f(&scm);
            let mp = mp_clean(&scm, panel.dimensionality())?;
            combine(&f, &mp, &scm, w)?
        }
        EstimatorKind::Population => {
            return Err(CliError::Invalid("population is not an estimator".into()))
        }
    })
}

fn synth_eval(a: &SynthEvalArgs, log: &dyn Fn(&str)) -> Result<String, CliError> {
    let mut csv = String::from("seed,scm,identity,f,mp,combined,theta,phi\n");
    for seed in a.seed_base..a.seed_base + a.seeds {
        let mut spec = SpikeSpec::null(a.m, a.base_variance)
            .with_innovation(a.dist)
            .with_ar1(a.ar1);
        if a.model == "spike" {
            for &l in &a.spikes {
                spec = spec.with_spike(l, None);
            }
            // directions depend on the seed; the panel uses an independent stream
            spec = spec.with_random_directions(seed.wrapping_mul(2).wrapping_add(1));
        }
        let pop = build_population(&spec)?;
        let panel = sample_panel(&pop, a.n, &spec, seed.wrapping_mul(2))?;
        let (centered, _) = demean(&panel);
        let scm = sample_covariance(&centered)?;
        let f = shrinkage_target_f(&scm);
        let mp = mp_clean(&scm, centered.dimensionality())?;
        let (w, err) = oracle_weights(&pop, &f, &mp, &scm)?;
        let e = |x: &CovarianceEstimate| frobenius_error(&pop, x).expect("same dimension");
        csv.push_str(&format!(
            "{seed},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            e(&scm),
            e(&identity_target(&scm)),
            e(&f),
            e(&mp),
            err,
            w.theta(),
            w.phi()
        ));
        log(&format!("seed {seed} done"));
    }
    Ok(csv)
}

#[derive(Serialize)]
struct RiskReport {
    estimator: EstimatorKind,
    params: EstimateMeta,
    daily_variance: f64,
    annualized_risk_pct: f64,
    expected_daily_return: f64,
    r_daily: f64,
    annual_return: f64,
    grid: GridSpec,
    iterations: usize,
    kkt_residual: f64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct BacktestDocConfig {
    input: String,
    train_len: usize,
    rebalance: Vec<usize>,
    annual_return_target: f64,
    estimators: Vec<EstimatorKind>,
    grid: GridSpec,
    annualization_days: f64,
}

#[derive(Serialize)]
struct BacktestDocument {
    config: BacktestDocConfig,
    estimators: Vec<crate::backtest::EstimatorRun>,
    ranking: Vec<crate::backtest::RankingRow>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn matrix_csv(panel: &ReturnsPanel, est: &CovarianceEstimate) -> String {
    let mut out = String::from("asset");
    for a in panel.assets() {
        out.push(',');
        out.push_str(a);
    }
    out.push('\n');
    for (i, a) in panel.assets().iter().enumerate() {
        out.push_str(a);
        for j in 0..est.dim() {
            out.push_str(&format!(",{:?}", est.matrix().get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Writes to `path` through a temp file in the same directory plus rename,
/// or to stdout when no path is given.
fn emit(path: Option<&Path>, content: String) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Invalid(format!("writing output: {e}"));
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(io)?;
            stdout.flush().map_err(io)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(content.as_bytes()).map_err(io)?;
            tmp.flush().map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}
