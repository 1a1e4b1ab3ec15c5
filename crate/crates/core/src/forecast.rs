//! Filtered sign forecasts of daily returns and their evaluation.
//!
//! 1. daily Ĥ_i from intraday log-prices
//! 2. (H, η, λ) fitted on the first half of the Ĥ series
//! 3. p_i = P(H̃_{i+τ} > 1/2 | H̃_i) with ρ(Ĥ, τλ̂), on second-half days
//! 4. state_i = +1 / −1 / 0 as p_i > β, p_i < 1−β, otherwise
//! 5. predicted_i = sign(close_i − close_{i−1}) · state_i

use std::ops::{Mul, Range};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::fou_autocorrelation;
use crate::error::{Error, Result};
use crate::estimators::{estimate_fou, hurst_series, FouEstimate, RegularitySeries};
use crate::info::{conditional_prob_up_normalized_with_rho, normalize_hurst};
use crate::rng::replica_seed;
use crate::stats::{bds_permutation_test, binomial_test};
use crate::types::{FouParams, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Pos
        } else if x < 0.0 {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        match self.value() * rhs.value() {
            1 => Sign::Pos,
            -1 => Sign::Neg,
            _ => Sign::Zero,
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        self * Sign::Neg
    }
}

/// +1 if `prob > beta`, −1 if `prob < 1 − beta`, else 0.
pub fn filter_state(prob: f64, beta: f64) -> Result<Sign> {
    check_beta(beta)?;
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid("prob", format!("must lie in [0,1], got {prob}")));
    }
    Ok(if prob > beta {
        Sign::Pos
    } else if prob < 1.0 - beta {
        Sign::Neg
    } else {
        Sign::Zero
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.5..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("must lie in [1/2, 1], got {beta}")))
    }
}

/// Inclusive grid min, min+step, … ≤ max, rounded to 12 decimals.
pub fn beta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    check_beta(min)?;
    check_beta(max)?;
    if min > max || !(step > 0.0) {
        return Err(Error::invalid("beta_step", "need min <= max and step > 0"));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSignal {
    pub day: usize,
    pub prob_up: f64,
    pub state: Sign,
    pub past_sign: Sign,
    pub predicted_sign: Sign,
    pub realized_sign: Sign,
}

/// Stages 1-2: regularity series, fit on the first half, daily closes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub regularity: RegularitySeries,
    pub estimate: FouEstimate,
    pub params: FouParams,
    pub closes: Vec<f64>,
    pub estimation_days: Range<usize>,
}

/// Stage-3 output for one lag τ.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProbabilities {
    pub tau: usize,
    pub rho: f64,
    /// (day, prob_up) for evaluation days with a regularity estimate.
    pub probs: Vec<(usize, f64)>,
}

impl ForecastModel {
    /// `closes` defaults to the last intraday value of each day.
    pub fn fit(log_prices: &SamplePath, closes: Option<&[f64]>, r: usize) -> Result<Self> {
        let regularity = hurst_series(log_prices, r)?;
        let n_days = regularity.n_days;
        let closes: Vec<f64> = match closes {
            Some(c) if c.len() >= n_days => c[..n_days].to_vec(),
            Some(c) => {
                return Err(Error::InsufficientData(format!(
                    "{} daily closes for {n_days} days",
                    c.len()
                )))
            }
            None => (0..n_days).map(|d| log_prices.values[(d + 1) * r - 1]).collect(),
        };
        let split = n_days / 2;
        if split < 2 {
            return Err(Error::InsufficientData(format!("{n_days} days cannot be halved")));
        }
        let first = regularity.slice_days(0..split);
        let estimate = estimate_fou(&first)?;
        let params = estimate.params().map_err(|e| {
            Error::Estimation(format!("fitted parameters unusable for forecasting: {e}"))
        })?;
        Ok(ForecastModel { regularity, estimate, params, closes, estimation_days: 0..split })
    }

    pub fn n_days(&self) -> usize {
        self.regularity.n_days
    }

    /// Evaluation days `[R/2, R−1−τ]`, whose τ-ahead close exists.
    pub fn evaluation_days(&self, tau: usize) -> Range<usize> {
        let start = self.estimation_days.end;
        start..self.n_days().saturating_sub(tau).max(start)
    }

    pub fn probabilities(&self, tau: usize, tol: f64) -> Result<DayProbabilities> {
        if tau == 0 {
            return Err(Error::invalid("tau", "must be >= 1"));
        }
        let days = self.evaluation_days(tau);
        if days.is_empty() {
            return Err(Error::InsufficientData(format!("no evaluation day for tau = {tau}")));
        }
        let rho = fou_autocorrelation(self.params.hurst, tau as f64 * self.params.lambda, tol)?;
        let mut probs = Vec::with_capacity(days.len());
        for d in days {
            let Some(h) = self.regularity.value_on(d) else { continue };
            let p = conditional_prob_up_normalized_with_rho(normalize_hurst(h), &self.params, rho)?;
            probs.push((d, p));
        }
        if probs.is_empty() {
            return Err(Error::DegenerateWindow("every evaluation day is degenerate".into()));
        }
        Ok(DayProbabilities { tau, rho, probs })
    }

    pub fn signals(&self, probs: &DayProbabilities, beta: f64) -> Result<Vec<ForecastSignal>> {
        probs
            .probs
            .iter()
            .map(|&(day, prob_up)| {
                let state = filter_state(prob_up, beta)?;
                let past_sign = Sign::of(self.closes[day] - self.closes[day - 1]);
                let realized_sign = Sign::of(self.closes[day + probs.tau] - self.closes[day]);
                Ok(ForecastSignal {
                    day,
                    prob_up,
                    state,
                    past_sign,
                    predicted_sign: past_sign * state,
                    realized_sign,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub estimate: FouEstimate,
    pub rho: f64,
    pub tau: usize,
    pub beta: f64,
    pub estimation_days: Range<usize>,
    pub signals: Vec<ForecastSignal>,
}

impl ForecastRun {
    pub fn hit_rate(&self) -> Result<HitRate> {
        let (pred, real): (Vec<Sign>, Vec<Sign>) =
            self.signals.iter().map(|s| (s.predicted_sign, s.realized_sign)).unzip();
        hit_rate(&pred, &real)
    }
}

/// Full five-step forecast with closes taken from the intraday path.
pub fn run_forecast(
    log_prices: &SamplePath,
    r: usize,
    tau: usize,
    beta: f64,
    tol: f64,
) -> Result<ForecastRun> {
    check_beta(beta)?;
    let model = ForecastModel::fit(log_prices, None, r)?;
    let probs = model.probabilities(tau, tol)?;
    let signals = model.signals(&probs, beta)?;
    Ok(ForecastRun {
        estimate: model.estimate,
        rho: probs.rho,
        tau,
        beta,
        estimation_days: model.estimation_days.clone(),
        signals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRate {
    pub rate: f64,
    pub hits: u64,
    pub n_active: u64,
}

/// Share of nonzero predictions matching the realized sign; a zero realized
/// increment is a miss.
pub fn hit_rate(predicted: &[Sign], realized: &[Sign]) -> Result<HitRate> {
    if predicted.len() != realized.len() {
        return Err(Error::invalid("realized", "must align with predictions"));
    }
    let mut hits = 0u64;
    let mut n_active = 0u64;
    for (p, r) in predicted.iter().zip(realized) {
        if *p != Sign::Zero {
            n_active += 1;
            if p == r {
                hits += 1;
            }
        }
    }
    if n_active == 0 {
        return Err(Error::UndefinedRate);
    }
    Ok(HitRate { rate: hits as f64 / n_active as f64, hits, n_active })
}

/// One (τ, β) cell. Rate and p-values are `None` when no forecast is active;
/// the BDS p-value is also `None` when the hit sequence is too short or
/// degenerate. BDS runs at dimension 3 on the 0/1 hit indicators of active
/// days, with a permutation p-value (the asymptotic normal law does not hold
/// for two-valued data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tau: usize,
    pub beta: f64,
    pub hit_rate: Option<f64>,
    pub hits: u64,
    pub n_active: u64,
    pub binom_pvalue: Option<f64>,
    pub bds_pvalue: Option<f64>,
}

pub const BDS_DIM: usize = 3;
pub const BDS_PERMUTATIONS: usize = 999;

/// Evaluates a fitted model over every (τ, β) pair. `seed` drives the BDS
/// permutations (one stream per cell).
pub fn evaluate_model(
    model: &ForecastModel,
    taus: &[usize],
    betas: &[f64],
    tol: f64,
    eps_factor: f64,
    seed: u64,
) -> Result<Vec<EvaluationReport>> {
    for &b in betas {
        check_beta(b)?;
    }
    let mut out = Vec::with_capacity(taus.len() * betas.len());
    for &tau in taus {
        let probs = model.probabilities(tau, tol)?;
        let cells: Vec<Result<EvaluationReport>> = betas
            .par_iter()
            .enumerate()
            .map(|(bi, &beta)| {
                let signals = model.signals(&probs, beta)?;
                let (pred, real): (Vec<Sign>, Vec<Sign>) =
                    signals.iter().map(|s| (s.predicted_sign, s.realized_sign)).unzip();
                match hit_rate(&pred, &real) {
                    Err(Error::UndefinedRate) => Ok(EvaluationReport {
                        tau,
                        beta,
                        hit_rate: None,
                        hits: 0,
                        n_active: 0,
                        binom_pvalue: None,
                        bds_pvalue: None,
                    }),
                    Err(e) => Err(e),
                    Ok(hr) => {
                        let hit_seq: Vec<f64> = signals
                            .iter()
                            .filter(|s| s.predicted_sign != Sign::Zero)
                            .map(|s| f64::from(u8::from(s.predicted_sign == s.realized_sign)))
                            .collect();
                        let cell_seed = replica_seed(seed, ((tau as u64) << 32) | bi as u64);
                        let bds = match bds_permutation_test(&hit_seq, BDS_DIM, eps_factor, BDS_PERMUTATIONS, cell_seed) {
                            Ok(b) => Some(b.pvalue),
                            Err(e) => {
                                log::info!("tau={tau} beta={beta}: BDS skipped ({e})");
                                None
                            }
                        };
                        Ok(EvaluationReport {
                            tau,
                            beta,
                            hit_rate: Some(hr.rate),
                            hits: hr.hits,
                            n_active: hr.n_active,
                            binom_pvalue: Some(binomial_test(hr.hits, hr.n_active)?),
                            bds_pvalue: bds,
                        })
                    }
                }
            })
            .collect();
        for c in cells {
            out.push(c?);
        }
    }
    Ok(out)
}

/// Fits the model on `log_prices` and evaluates every (τ, β) pair.
pub fn evaluate(
    log_prices: &SamplePath,
    daily_closes: Option<&[f64]>,
    r: usize,
    taus: &[usize],
    betas: &[f64],
    tol: f64,
    eps_factor: f64,
    seed: u64,
) -> Result<Vec<EvaluationReport>> {
    let model = ForecastModel::fit(log_prices, daily_closes, r)?;
    evaluate_model(&model, taus, betas, tol, eps_factor, seed)
}
