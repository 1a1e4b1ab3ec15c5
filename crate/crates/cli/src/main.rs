//! `fsrm` command-line front end.
//!
//! ```text
//! fsrm simulate --H 0.8 --eta 0.08 --lambda 0.05 --days 2000 --r 391 > prices.csv
//! fsrm forecast --input prices.csv --tau 1 --beta 0.7
//! fsrm evaluate --input prices.csv --out-dir run/
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsrm_core::analytics::{correlation_curve, fou_autocorrelation, fou_variance, min_autocorrelation};
use fsrm_core::forecast::ForecastModel;
use fsrm_core::info::{prob_up_given_up, serial_info_from_rho};
use fsrm_core::io::{format_float, ingest_reader, series_table, write_atomic, CsvTable, IngestedSeries};
use fsrm_core::pipeline::{forecast_table, run_pipeline_on, EstimateReport, RunConfig};
use fsrm_core::sim::{gen_fbm, gen_fou, gen_fsrm_prices, FsrmConfig};
use fsrm_core::{Error, ErrorKind, FouParams, SamplePath};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fsrm", version, about = "Fractional stochastic regularity model toolchain")]
struct Cli {
    /// Repeat for more log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate fBm, fOU or FSRM log-prices as `t,value` CSV.
    Simulate(SimulateArgs),
    /// Closed-form fOU quantities for one parameter set (JSON).
    Analyze(AnalyzeArgs),
    /// Autocorrelation and serial information over an (H, mλ) grid (CSV).
    Surface(SurfaceArgs),
    /// Fit (H, η, λ) to the first half of the daily regularity series (JSON).
    Estimate(PipelineArgs),
    /// Daily sign forecasts for the second half (CSV).
    Forecast(PipelineArgs),
    /// Full run: estimate, forecast, evaluation grid and manifest.
    Evaluate(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fbm,
    Fou,
    Fsrm,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "fsrm")]
    kind: Kind,
    /// Hurst exponent (fBm) or fOU regularity parameter.
    #[arg(long = "H", default_value_t = 0.5)]
    hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    mean: f64,
    #[arg(long, default_value_t = 250)]
    days: usize,
    /// Observations per day.
    #[arg(long, default_value_t = 391)]
    r: usize,
    #[arg(long, default_value_t = 0.01)]
    scale_c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fOU only: step in days (default 1, one value per day).
    #[arg(long)]
    dt: Option<f64>,
    /// Write `prices.csv` here instead of stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "H")]
    hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Lag m (days) for ρ(mλ) and the serial information.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Lag-minimum scan range in s·λ.
    #[arg(long, default_value_t = 10.0)]
    s_max: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = fsrm_core::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SurfaceArgs {
    /// start:stop:step, inclusive.
    #[arg(long = "grid-H", default_value = "0.05:0.95:0.05")]
    grid_h: String,
    #[arg(long = "grid-mlambda", default_value = "0.01:10:0.01")]
    grid_mlambda: String,
    #[arg(long, default_value_t = fsrm_core::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Flags shared by estimate / forecast / evaluate. Unset flags fall back to
/// the `--config` file, then to built-in defaults.
#[derive(Args)]
struct PipelineArgs {
    /// `timestamp,price` or `t,value` CSV; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Observations per day (default: modal count per calendar day).
    #[arg(long)]
    r: Option<usize>,
    /// Forecast lags in days, comma separated.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<usize>>,
    /// Filter threshold for `forecast` [default: 0.7].
    #[arg(long)]
    beta: Option<f64>,
    /// Threshold grid for `evaluate` [default: 0.5:0.9:0.01].
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
    /// Quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for bootstrap and BDS permutations.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; stdout when absent (`evaluate` defaults to `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// BDS radius in standard deviations [default: 1].
    #[arg(long)]
    eps_factor: Option<f64>,
    /// Bootstrap resamples for the estimate CI (0 disables).
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Flat `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PipelineArgs {
    /// Defaults, then the config file, then explicit flags.
    fn resolve(&self) -> Result<(RunConfig, bool), Error> {
        let mut cfg = RunConfig::default();
        let mut out_dir_set = false;
        if let Some(path) = &self.config {
            let entries = fsrm_core::io::read_config(path)?;
            out_dir_set = entries.contains_key("out_dir") || entries.contains_key("out-dir");
            cfg.apply(&entries)?;
        }
        if let Some(v) = &self.input {
            cfg.input = v.clone();
        }
        if let Some(v) = self.r {
            cfg.r = Some(v);
        }
        if let Some(v) = &self.tau {
            cfg.taus = v.clone();
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        take!(beta, beta_min, beta_max, beta_step, tol, seed, eps_factor, bootstrap);
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
            out_dir_set = true;
        }
        cfg.validate()?;
        Ok((cfg, out_dir_set))
    }
}

fn read_input(cfg: &RunConfig) -> Result<Vec<u8>, Error> {
    if cfg.input.as_os_str().is_empty() || cfg.input.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|source| Error::Io { path: "<stdin>".into(), source })?;
        Ok(buf)
    } else {
        std::fs::read(&cfg.input)
            .map_err(|source| Error::Io { path: cfg.input.display().to_string(), source })
    }
}

fn ingest(cfg: &RunConfig) -> Result<(Vec<u8>, IngestedSeries), Error> {
    let bytes = read_input(cfg).map_err(|e| e.in_stage("ingest"))?;
    let series = ingest_reader(bytes.as_slice(), cfg.r).map_err(|e| e.in_stage("ingest"))?;
    Ok((bytes, series))
}

/// Writes to `dir/name` when a directory is given, else to stdout.
fn emit(dir: Option<&PathBuf>, name: &str, content: &str) -> Result<(), Error> {
    match dir {
        Some(d) => write_atomic(d.join(name), content.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

/// `a:b:step`, inclusive of b up to rounding.
fn parse_grid(name: &'static str, text: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("--{name}: expected start:stop:step, got `{text}`"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn simulate(a: &SimulateArgs) -> Result<(), Error> {
    let path: SamplePath = match a.kind {
        Kind::Fbm => gen_fbm(a.hurst, a.r * a.days, 1.0 / a.r as f64, a.scale_c, a.seed)?,
        Kind::Fou => {
            let p = FouParams::with_mean(a.hurst, a.eta, a.lambda, a.mean)?;
            let dt = a.dt.unwrap_or(1.0);
            gen_fou(&p, (a.days as f64 / dt).round() as usize, dt, a.seed, None)?
        }
        Kind::Fsrm => {
            let p = FouParams::with_mean(a.hurst, a.eta, a.lambda, a.mean)?;
            gen_fsrm_prices(&FsrmConfig::new(p, a.scale_c, a.r, a.days, a.seed)?)?.log_prices
        }
    };
    emit(a.out_dir.as_ref(), "prices.csv", &series_table(&path).render())
}

#[derive(Serialize)]
struct Analysis {
    params: FouParams,
    variance: f64,
    lag: f64,
    rho: f64,
    serial_info: f64,
    prob_up_given_up: f64,
    lag_min_s_star: f64,
    lag_min_rho: f64,
}

fn analyze(a: &AnalyzeArgs) -> Result<(), Error> {
    let params = FouParams::new(a.hurst, a.eta, a.lambda)?;
    let rho = fou_autocorrelation(a.hurst, a.m * a.lambda, a.tol)?;
    let lag_min = min_autocorrelation(a.hurst, a.s_max, a.step, a.tol)?;
    let out = Analysis {
        params,
        variance: fou_variance(&params),
        lag: a.m,
        rho,
        serial_info: serial_info_from_rho(rho)?,
        prob_up_given_up: prob_up_given_up(rho),
        lag_min_s_star: lag_min.s_star / a.lambda,
        lag_min_rho: lag_min.rho_min,
    };
    let mut s = serde_json::to_string_pretty(&out).expect("analysis serializes");
    s.push('\n');
    emit(a.out_dir.as_ref(), "analysis.json", &s)
}

fn surface(a: &SurfaceArgs) -> Result<(), Error> {
    let hs = parse_grid("grid-H", &a.grid_h)?;
    let ms = parse_grid("grid-mlambda", &a.grid_mlambda)?;
    let mut t = CsvTable::new(["hurst", "mlambda", "rho", "serial_info"]);
    for h in hs {
        let curve = correlation_curve(h, &ms, a.tol)?;
        for (m, rho) in curve.product_grid.iter().zip(&curve.rho) {
            t.push(vec![
                format_float(h),
                format_float(*m),
                format_float(*rho),
                format_float(serial_info_from_rho(*rho)?),
            ]);
        }
    }
    emit(a.out_dir.as_ref(), "surface.csv", &t.render())
}

fn estimate(a: &PipelineArgs) -> Result<(), Error> {
    let (cfg, to_dir) = a.resolve()?;
    let (_, series) = ingest(&cfg)?;
    let report = EstimateReport::from_series(&series, cfg.bootstrap, cfg.seed)
        .map_err(|e| e.in_stage("estimate"))?;
    emit(to_dir.then_some(&cfg.out_dir), "estimate.json", &report.to_json())
}

fn forecast(a: &PipelineArgs) -> Result<(), Error> {
    let (cfg, to_dir) = a.resolve()?;
    let (_, series) = ingest(&cfg)?;
    let model = ForecastModel::fit(&series.log_prices, Some(&series.closes), series.r)
        .map_err(|e| e.in_stage("estimate"))?;
    let blocks = cfg
        .taus
        .iter()
        .map(|&tau| {
            let probs = model.probabilities(tau, cfg.tol)?;
            Ok((tau, model.signals(&probs, cfg.beta)?))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(|e| e.in_stage("forecast"))?;
    let table = forecast_table(&model, &blocks, Some(&series.day_labels));
    emit(to_dir.then_some(&cfg.out_dir), "forecast.csv", &table.render())
}

fn evaluate(a: &PipelineArgs) -> Result<(), Error> {
    let (cfg, _) = a.resolve()?;
    let bytes = read_input(&cfg).map_err(|e| e.in_stage("ingest"))?;
    let summary = run_pipeline_on(&cfg, &bytes)?;
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Surface(a) => surface(a),
        Command::Estimate(a) => estimate(a),
        Command::Forecast(a) => forecast(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsrm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "0.05:0.15:0.05").unwrap(), vec![0.05, 0.1, 0.15]);
        assert_eq!(parse_grid("g", "0.01:10:0.01").unwrap().len(), 1000);
        assert!(parse_grid("g", "1:0:0.1").is_err());
        assert!(parse_grid("g", "0:1").is_err());
        assert!(parse_grid("g", "0:1:0").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
