//! Synthetic intraday log-prices whose daily regularity follows a fOU.
//!
//! Day i uses a constant exponent h_i (tangent-fBm approximation). The daily
//! close-to-close increment D_i is drawn from the fGn(h_i) law conditioned on
//! the previous `cross_day_memory` daily increments; the r intraday increments
//! are fGn(h_i) on a 1/r grid conditioned to sum to D_i. Inside a day the
//! path is therefore exactly fBm(h_i) with scale C.

use serde::{Deserialize, Serialize};

use super::fgn::{fgn_autocovariance, FgnGenerator};
use super::fou::{default_burn_in, simulate_fou, Scheme};
use crate::error::{Error, Result};
use crate::info::normalize_hurst;
use crate::rng::stream;
use crate::types::{FouParams, SamplePath};
use rand::Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_CROSS_DAY_MEMORY: usize = 10;
/// Upper bound on r·R samples held in memory.
pub const DEFAULT_MAX_SAMPLES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsrmConfig {
    pub fou: FouParams,
    pub scale_c: f64,
    pub obs_per_day: usize,
    pub days: usize,
    pub seed: u64,
    /// Past daily increments the next day's increment is conditioned on.
    pub cross_day_memory: usize,
    pub max_samples: usize,
}

impl FsrmConfig {
    pub fn new(fou: FouParams, scale_c: f64, obs_per_day: usize, days: usize, seed: u64) -> Result<Self> {
        let cfg = FsrmConfig {
            fou,
            scale_c,
            obs_per_day,
            days,
            seed,
            cross_day_memory: DEFAULT_CROSS_DAY_MEMORY,
            max_samples: DEFAULT_MAX_SAMPLES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.fou.validate()?;
        if !(self.scale_c.is_finite() && self.scale_c > 0.0) {
            return Err(Error::invalid("scale_c", format!("must be > 0, got {}", self.scale_c)));
        }
        if self.obs_per_day < 4 {
            return Err(Error::invalid("r", format!("must be >= 4, got {}", self.obs_per_day)));
        }
        if self.days < 2 {
            return Err(Error::invalid("days", format!("must be >= 2, got {}", self.days)));
        }
        match self.obs_per_day.checked_mul(self.days) {
            Some(n) if n <= self.max_samples => Ok(()),
            _ => Err(Error::invalid(
                "days",
                format!("r*R exceeds the memory cap of {} samples", self.max_samples),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsrmSample {
    /// r·R log-prices; sample j lies in day j / r, dt = 1/r.
    pub log_prices: SamplePath,
    /// Daily fOU values H_i.
    pub true_hurst: Vec<f64>,
    /// Exponents h_i actually used (H_i mapped into (0,1) when needed).
    pub applied_hurst: Vec<f64>,
}

pub fn gen_fsrm_prices(cfg: &FsrmConfig) -> Result<FsrmSample> {
    cfg.validate()?;
    let r = cfg.obs_per_day;
    let days = cfg.days;

    // Daily regularity: fOU at unit spacing, sub-stepped so that λ·dt ≤ 0.1.
    let sub = ((cfg.fou.lambda / 0.1).ceil() as usize).max(1);
    let dt = 1.0 / sub as f64;
    let fine = simulate_fou(
        &cfg.fou,
        (days - 1) * sub + 1,
        dt,
        Some(default_burn_in(cfg.fou.lambda, dt)),
        Scheme::default(),
        &mut stream(cfg.seed, 0),
    )?;
    let true_hurst: Vec<f64> = fine.iter().step_by(sub).copied().collect();
    let applied_hurst: Vec<f64> = true_hurst
        .iter()
        .map(|&h| if h > 0.0 && h < 1.0 { h } else { normalize_hurst(h) })
        .collect();

    let mut rng = stream(cfg.seed, 1);
    let mut daily: Vec<f64> = Vec::with_capacity(days);
    let mut values = Vec::with_capacity(r * days);
    let mut level = 0.0;
    let mut e = vec![0.0; r];
    for (i, &h) in applied_hurst.iter().enumerate() {
        let p = cfg.cross_day_memory.min(i);
        let gamma: Vec<f64> = (0..=p).map(|k| fgn_autocovariance(h, k)).collect();
        let (phi, var) = levinson(&gamma);
        let mean: f64 = phi.iter().enumerate().map(|(j, c)| c * daily[i - 1 - j]).sum();
        let z: f64 = rng.sample(StandardNormal);
        let u = mean + var.max(0.0).sqrt() * z;
        daily.push(u);

        // Intraday fGn on the 1/r grid, unit variance over the day.
        FgnGenerator::new(h, r)?.sample_into(&mut rng, &mut e);
        let step = (r as f64).recip().powf(h);
        e.iter_mut().for_each(|x| *x *= step);
        let gap = u - e.iter().sum::<f64>();
        let h2 = 2.0 * h;
        for (j, x) in e.iter_mut().enumerate() {
            let t0 = j as f64 / r as f64;
            let t1 = (j + 1) as f64 / r as f64;
            let cov = 0.5 * (t1.powf(h2) - t0.powf(h2) + (1.0 - t0).powf(h2) - (1.0 - t1).powf(h2));
            *x += gap * cov;
        }
        for x in &e {
            level += cfg.scale_c * x;
            values.push(level);
        }
    }
    Ok(FsrmSample {
        log_prices: SamplePath::new(1.0 / r as f64, 0.0, values)?,
        true_hurst,
        applied_hurst,
    })
}

/// Durbin-Levinson: one-step predictor coefficients φ (φ[0] multiplies the
/// most recent value) and innovation variance for autocovariances γ[0..=p].
fn levinson(gamma: &[f64]) -> (Vec<f64>, f64) {
    let p = gamma.len() - 1;
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut v = gamma[0];
    for k in 1..=p {
        let acc: f64 = phi.iter().enumerate().map(|(j, c)| c * gamma[k - 1 - j]).sum();
        let kappa = (gamma[k] - acc) / v;
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[k - 2 - j];
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
    }
    (phi, v)
}
