//! End-to-end run: ingest → estimate → forecast → evaluate → artifacts.
//!
//! Files written to `out_dir`:
//!
//! | file              | content                                          |
//! |-------------------|--------------------------------------------------|
//! | `estimate.json`   | fitted (Ĥ, η̂, λ̂), bootstrap CI, Ĥ_i moments     |
//! | `forecast.csv`    | per-day signals at `beta`, one block per τ       |
//! | `evaluation.csv`  | hit rate / binomial / BDS over the (τ, β) grid   |
//! | `manifest.json`   | input digest, seed, version, config, output digests |

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{bootstrap_ci, estimate_fou, hurst_series, FouConfidence, FouEstimate, RegularitySeries};
use crate::forecast::{beta_grid, evaluate_model, EvaluationReport, ForecastModel, ForecastSignal};
use crate::io::{format_float, ingest_reader, sha256_hex, write_atomic, CsvTable, IngestedSeries, SCHEMA_VERSION};
use crate::stats::{describe, Descriptive};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Observations per day; inferred from the data when `None`.
    pub r: Option<usize>,
    pub taus: Vec<usize>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_step: f64,
    /// Threshold used for `forecast.csv`.
    pub beta: f64,
    pub tol: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub eps_factor: f64,
    /// Bootstrap resamples for the estimate CI; 0 disables it.
    pub bootstrap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            r: None,
            taus: vec![1],
            beta_min: 0.5,
            beta_max: 0.9,
            beta_step: 0.01,
            beta: 0.7,
            tol: crate::analytics::DEFAULT_TOL,
            seed: 0,
            out_dir: PathBuf::from("out"),
            eps_factor: 1.0,
            bootstrap: 500,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

impl RunConfig {
    /// Sets one `key = value` entry (keys as in the config file).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "input" => self.input = PathBuf::from(value),
            "r" => self.r = Some(parse_value(key, value)?),
            "tau" | "taus" => {
                self.taus = value
                    .split(',')
                    .map(|t| parse_value(key, t.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            "beta" => self.beta = parse_value(key, value)?,
            "beta_min" => self.beta_min = parse_value(key, value)?,
            "beta_max" => self.beta_max = parse_value(key, value)?,
            "beta_step" => self.beta_step = parse_value(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "eps_factor" => self.eps_factor = parse_value(key, value)?,
            "bootstrap" => self.bootstrap = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        entries.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn betas(&self) -> Result<Vec<f64>> {
        beta_grid(self.beta_min, self.beta_max, self.beta_step)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.r {
            if r < 4 {
                return Err(Error::invalid("r", format!("must be >= 4, got {r}")));
            }
        }
        if self.taus.is_empty() || self.taus.contains(&0) {
            return Err(Error::invalid("tau", "need at least one lag, each >= 1"));
        }
        if !(0.5..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", format!("must lie in [1/2, 1], got {}", self.beta)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", format!("must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.eps_factor.is_finite() && self.eps_factor > 0.0) {
            return Err(Error::invalid("eps_factor", "must be > 0"));
        }
        self.betas().map(|_| ())
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("input", self.input.display().to_string());
        m.insert("r", self.r.map_or_else(|| "auto".into(), |r| r.to_string()));
        m.insert("tau", self.taus.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
        m.insert("beta", self.beta.to_string());
        m.insert("beta_min", self.beta_min.to_string());
        m.insert("beta_max", self.beta_max.to_string());
        m.insert("beta_step", self.beta_step.to_string());
        m.insert("tol", self.tol.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("eps_factor", self.eps_factor.to_string());
        m.insert("bootstrap", self.bootstrap.to_string());
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub r: usize,
    pub n_days: usize,
    pub estimation_days: [usize; 2],
    pub degenerate_days: Vec<usize>,
    pub estimate: FouEstimate,
    pub confidence: Option<FouConfidence>,
    pub regularity: Descriptive,
}

impl EstimateReport {
    pub fn build(
        regularity: &RegularitySeries,
        estimation_days: Range<usize>,
        estimate: FouEstimate,
        r: usize,
        bootstrap: usize,
        seed: u64,
    ) -> Result<Self> {
        let first = regularity.slice_days(estimation_days.clone());
        let confidence = if bootstrap > 0 {
            match bootstrap_ci(&first.values, bootstrap, 0.95, seed) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("bootstrap skipped: {e}");
                    None
                }
            }
        } else {
            None
        };
        Ok(EstimateReport {
            schema_version: SCHEMA_VERSION,
            r,
            n_days: regularity.n_days,
            estimation_days: [estimation_days.start, estimation_days.end],
            degenerate_days: regularity.gaps(),
            estimate,
            confidence,
            regularity: describe(&first.values)?,
        })
    }

    /// Stage 1-2 only: fit on the first half without requiring Ĥ in (0,1).
    pub fn from_series(series: &IngestedSeries, bootstrap: usize, seed: u64) -> Result<Self> {
        let regularity = hurst_series(&series.log_prices, series.r)?;
        let split = regularity.n_days / 2;
        if split < 2 {
            return Err(Error::InsufficientData(format!("{} days cannot be halved", regularity.n_days)));
        }
        let estimate = estimate_fou(&regularity.slice_days(0..split))?;
        Self::build(&regularity, 0..split, estimate, series.r, bootstrap, seed)
    }

    pub fn from_model(model: &ForecastModel, r: usize, bootstrap: usize, seed: u64) -> Result<Self> {
        Self::build(&model.regularity, model.estimation_days.clone(), model.estimate, r, bootstrap, seed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn forecast_table(
    model: &ForecastModel,
    blocks: &[(usize, Vec<ForecastSignal>)],
    labels: Option<&[String]>,
) -> CsvTable {
    let mut t = CsvTable::new([
        "tau", "day", "date", "hurst_hat", "prob_up", "state", "past_sign", "predicted_sign",
        "realized_sign",
    ]);
    for (tau, signals) in blocks {
        for s in signals {
            t.push(vec![
                tau.to_string(),
                s.day.to_string(),
                labels.map_or_else(|| s.day.to_string(), |l| l[s.day].clone()),
                format_float(model.regularity.value_on(s.day).unwrap_or(f64::NAN)),
                format_float(s.prob_up),
                s.state.value().to_string(),
                s.past_sign.value().to_string(),
                s.predicted_sign.value().to_string(),
                s.realized_sign.value().to_string(),
            ]);
        }
    }
    t
}

pub fn evaluation_table(reports: &[EvaluationReport]) -> CsvTable {
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    let mut t = CsvTable::new([
        "tau", "beta", "hit_rate", "hits", "n_active", "binom_pvalue", "bds_pvalue",
    ]);
    for r in reports {
        t.push(vec![
            r.tau.to_string(),
            format!("{:.4}", r.beta),
            opt(r.hit_rate),
            r.hits.to_string(),
            r.n_active.to_string(),
            opt(r.binom_pvalue),
            opt(r.bds_pvalue),
        ]);
    }
    t
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    seed: u64,
    input_sha256: String,
    input_rows: usize,
    dropped_days: &'a [String],
    config: BTreeMap<&'static str, String>,
    outputs: BTreeMap<&'static str, String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub estimate: FouEstimate,
    pub reports: Vec<EvaluationReport>,
    pub files: Vec<PathBuf>,
}

/// Fits, forecasts and evaluates an ingested series.
pub struct Analysis {
    pub model: ForecastModel,
    pub forecasts: Vec<(usize, Vec<ForecastSignal>)>,
    pub reports: Vec<EvaluationReport>,
}

pub fn analyze(series: &IngestedSeries, cfg: &RunConfig) -> Result<Analysis> {
    let model = ForecastModel::fit(&series.log_prices, Some(&series.closes), series.r)
        .map_err(|e| e.in_stage("estimate"))?;
    let forecasts = cfg
        .taus
        .iter()
        .map(|&tau| {
            let probs = model.probabilities(tau, cfg.tol)?;
            Ok((tau, model.signals(&probs, cfg.beta)?))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("forecast"))?;
    let reports = evaluate_model(&model, &cfg.taus, &cfg.betas()?, cfg.tol, cfg.eps_factor, cfg.seed)
        .map_err(|e| e.in_stage("evaluate"))?;
    Ok(Analysis { model, forecasts, reports })
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let bytes = fs::read(&cfg.input).map_err(|e| Error::io(&cfg.input, e).in_stage("ingest"))?;
    run_pipeline_on(cfg, &bytes)
}

/// As [`run_pipeline`] with the input CSV already in memory.
pub fn run_pipeline_on(cfg: &RunConfig, bytes: &[u8]) -> Result<RunSummary> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let series = ingest_reader(bytes, cfg.r).map_err(|e| e.in_stage("ingest"))?;
    let analysis = analyze(&series, cfg)?;
    let estimate = EstimateReport::from_model(&analysis.model, series.r, cfg.bootstrap, cfg.seed)
        .map_err(|e| e.in_stage("estimate"))?;

    let mut artifacts: Vec<(&'static str, String)> = vec![
        ("estimate.json", estimate.to_json()),
        (
            "forecast.csv",
            forecast_table(&analysis.model, &analysis.forecasts, Some(&series.day_labels)).render(),
        ),
        ("evaluation.csv", evaluation_table(&analysis.reports).render()),
    ];
    let outputs = artifacts.iter().map(|(n, c)| (*n, sha256_hex(c.as_bytes()))).collect();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "fsrm",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        input_sha256: sha256_hex(bytes),
        input_rows: series.n_rows,
        dropped_days: &series.dropped_days,
        config: cfg.entries(),
        outputs,
    };
    let mut m = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    m.push('\n');
    artifacts.push(("manifest.json", m));

    let mut files = Vec::new();
    for (name, content) in &artifacts {
        let path = cfg.out_dir.join(name);
        write_atomic(&path, content.as_bytes()).map_err(|e| e.in_stage("write"))?;
        files.push(path);
    }
    Ok(RunSummary { estimate: analysis.model.estimate, reports: analysis.reports, files })
}

/// Reads every artifact of a finished run, keyed by file name.
pub fn read_artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for name in ["estimate.json", "forecast.csv", "evaluation.csv", "manifest.json"] {
        let p = dir.join(name);
        out.insert(name.to_string(), fs::read(&p).map_err(|e| Error::io(&p, e))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys() {
        let mut c = RunConfig::default();
        c.set("tau", "1, 5").unwrap();
        c.set("beta-min", "0.6").unwrap();
        c.set("r", "391").unwrap();
        assert_eq!(c.taus, vec![1, 5]);
        assert_eq!(c.beta_min, 0.6);
        assert_eq!(c.r, Some(391));
        assert!(matches!(c.set("colour", "red"), Err(Error::Config(_))));
        assert!(matches!(c.set("seed", "-1"), Err(Error::Config(_))));
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = [
            RunConfig { r: Some(3), ..Default::default() },
            RunConfig { taus: vec![], ..Default::default() },
            RunConfig { beta: 0.4, ..Default::default() },
            RunConfig { beta_max: 1.1, ..Default::default() },
            RunConfig { tol: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert_eq!(c.validate().unwrap_err().kind(), crate::error::ErrorKind::Config, "{c:?}");
        }
    }

    #[test]
    fn missing_input_names_stage() {
        let c = RunConfig { input: "/nonexistent/x.csv".into(), ..Default::default() };
        let e = run_pipeline(&c).unwrap_err();
        assert!(e.to_string().starts_with("stage `ingest`"), "{e}");
        assert_eq!(e.kind(), crate::error::ErrorKind::Data);
    }
}
