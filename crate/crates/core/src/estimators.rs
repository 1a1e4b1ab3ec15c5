//! Local Hurst exponents from second differences and fOU parameter fits.
//!
//! Ĥ_t = ½ log₂(M′/M) where M is the mean squared second difference over the
//! window and M′ the mean squared lag-2 second difference.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::types::{FouParams, SamplePath};

/// Daily regularity estimates. Degenerate days are absent from `values`;
/// `day_index[k]` is the day of `values[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularitySeries {
    pub values: Vec<f64>,
    pub day_index: Vec<usize>,
    pub nu: usize,
    pub n_days: usize,
}

impl RegularitySeries {
    /// Gap-free series of `values` on days 0, 1, ….
    pub fn contiguous(values: Vec<f64>, nu: usize) -> Self {
        let n = values.len();
        RegularitySeries { values, day_index: (0..n).collect(), nu, n_days: n }
    }

    /// Days without an estimate.
    pub fn gaps(&self) -> Vec<usize> {
        let mut have = vec![false; self.n_days];
        for &d in &self.day_index {
            have[d] = true;
        }
        (0..self.n_days).filter(|&d| !have[d]).collect()
    }

    /// Estimate for `day`, if that day was not degenerate.
    pub fn value_on(&self, day: usize) -> Option<f64> {
        self.day_index.binary_search(&day).ok().map(|k| self.values[k])
    }

    /// Estimates restricted to days in `range`.
    pub fn slice_days(&self, range: std::ops::Range<usize>) -> RegularitySeries {
        let (values, day_index) = self
            .values
            .iter()
            .zip(&self.day_index)
            .filter(|(_, d)| range.contains(d))
            .map(|(v, d)| (*v, *d))
            .unzip();
        RegularitySeries { values, day_index, nu: self.nu, n_days: self.n_days }
    }
}

/// Ĥ = ½ log₂(M′/M) at index `t` with window `nu`.
///
/// M averages (x_{t−i} − 2x_{t−1−i} + x_{t−2−i})² for i < ν; M′ averages
/// (x_{t−2i} − 2x_{t−2−2i} + x_{t−4−2i})² for i ≤ ⌊(ν−1)/2⌋.
pub fn local_hurst(x: &[f64], nu: usize, t: usize) -> Result<f64> {
    if nu < 4 {
        return Err(Error::invalid("nu", format!("window must be >= 4, got {nu}")));
    }
    let q = (nu - 1) / 2;
    if t >= x.len() || t < nu + 1 || t < 2 * q + 4 {
        return Err(Error::InsufficientData(format!(
            "index t={t} with window {nu} needs t >= {} and t < {}",
            (nu + 1).max(2 * q + 4),
            x.len()
        )));
    }
    let m: f64 = (0..nu)
        .map(|i| {
            let d = x[t - i] - 2.0 * x[t - 1 - i] + x[t - 2 - i];
            d * d
        })
        .sum::<f64>()
        / nu as f64;
    let m2: f64 = (0..=q)
        .map(|i| {
            let d = x[t - 2 * i] - 2.0 * x[t - 2 - 2 * i] + x[t - 4 - 2 * i];
            d * d
        })
        .sum::<f64>()
        / (q + 1) as f64;
    if m == 0.0 || m2 == 0.0 {
        return Err(Error::DegenerateWindow(format!("vanishing second differences at t={t}")));
    }
    let h = 0.5 * (m2 / m).log2();
    if !h.is_finite() {
        return Err(Error::DegenerateWindow(format!("non-finite estimate at t={t}")));
    }
    Ok(h)
}

/// Largest window ν ≥ 4 usable at the last index of a series of length `len`.
pub fn max_window(len: usize) -> Option<usize> {
    if len < 7 {
        return None;
    }
    let q_max = (len - 5) / 2;
    Some((len - 2).min(2 * q_max + 2))
}

/// One Ĥ per complete day of `r` observations, each from that day only.
pub fn hurst_series(log_prices: &SamplePath, r: usize) -> Result<RegularitySeries> {
    let nu = max_window(r)
        .ok_or_else(|| Error::invalid("r", format!("need r >= 7 observations per day, got {r}")))?;
    let x = &log_prices.values;
    if x.len() < 2 * r {
        return Err(Error::InsufficientData(format!(
            "{} samples is fewer than two days of {r}",
            x.len()
        )));
    }
    let n_days = x.len() / r;
    let per_day: Vec<Result<Option<f64>>> = (0..n_days)
        .into_par_iter()
        .map(|d| match local_hurst(&x[d * r..(d + 1) * r], nu, r - 1) {
            Ok(h) => Ok(Some(h)),
            Err(Error::DegenerateWindow(msg)) => {
                log::warn!("day {d} excluded: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect();
    let mut values = Vec::with_capacity(n_days);
    let mut day_index = Vec::with_capacity(n_days);
    for (d, v) in per_day.into_iter().enumerate() {
        if let Some(h) = v? {
            values.push(h);
            day_index.push(d);
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateWindow("every day is degenerate".into()));
    }
    Ok(RegularitySeries { values, day_index, nu, n_days })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FouEstimate {
    pub hurst_hat: f64,
    pub eta_hat: f64,
    pub lambda_hat: f64,
    pub sample_size: usize,
}

impl FouEstimate {
    /// Fitted parameters with the long-term mean 1/2.
    pub fn params(&self) -> Result<FouParams> {
        FouParams::new(self.hurst_hat, self.eta_hat, self.lambda_hat)
    }
}

/// Fits (H, η, λ) to a regularity series.
///
/// Ĥ from [`local_hurst`] over the whole series; η̂² = Σ|ΔΔY|² / (R(4 − 4^Ĥ));
/// λ̂ inverts Var = η²Γ(2H+1)/(2λ^{2H}) at the plug-in variance.
pub fn estimate_fou(y: &RegularitySeries) -> Result<FouEstimate> {
    estimate_fou_values(&y.values)
}

pub fn estimate_fou_values(y: &[f64]) -> Result<FouEstimate> {
    let n = y.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 values, got {n}")));
    }
    let nu = max_window(n).expect("n >= 10");
    let h = local_hurst(y, nu, n - 1)?;
    let denom = n as f64 * (4.0 - 4f64.powf(h));
    if denom <= 0.0 {
        return Err(Error::Estimation(format!("4 - 4^H <= 0 at H = {h}")));
    }
    let ssd: f64 = y.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2)).sum();
    let eta = (ssd / denom).sqrt();
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 || eta == 0.0 {
        return Err(Error::Estimation("regularity series has zero variance".into()));
    }
    if h == 0.0 {
        return Err(Error::Estimation("H = 0 leaves lambda undefined".into()));
    }
    let lambda = (var / (eta * eta * gamma(2.0 * h + 1.0) / 2.0)).powf(-1.0 / (2.0 * h));
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Estimation(format!("lambda estimate {lambda} at H = {h}")));
    }
    Ok(FouEstimate { hurst_hat: h, eta_hat: eta, lambda_hat: lambda, sample_size: n })
}

/// Percentile intervals from a moving-block bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FouConfidence {
    pub level: f64,
    pub hurst: [f64; 2],
    pub eta: [f64; 2],
    pub lambda: [f64; 2],
    pub block_length: usize,
    pub resamples: usize,
    pub failed_resamples: usize,
}

/// Moving-block bootstrap (block length ⌈R^{1/3}⌉) of [`estimate_fou`].
pub fn bootstrap_ci(y: &[f64], resamples: usize, level: f64, seed: u64) -> Result<FouConfidence> {
    let n = y.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 values, got {n}")));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(Error::invalid("level", "need 0 < level < 1 and resamples >= 1"));
    }
    let block = ((n as f64).cbrt().ceil() as usize).clamp(1, n);
    let starts = n - block + 1;
    let fits: Vec<Option<FouEstimate>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut sample = Vec::with_capacity(n + block);
            while sample.len() < n {
                let s = rng.random_range(0..starts);
                sample.extend_from_slice(&y[s..s + block]);
            }
            sample.truncate(n);
            estimate_fou_values(&sample).ok()
        })
        .collect();
    let ok: Vec<FouEstimate> = fits.into_iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::Estimation("bootstrap produced fewer than two valid fits".into()));
    }
    let alpha = 0.5 * (1.0 - level);
    let interval = |f: fn(&FouEstimate) -> f64| {
        let mut v: Vec<f64> = ok.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        [quantile(&v, alpha), quantile(&v, 1.0 - alpha)]
    };
    Ok(FouConfidence {
        level,
        hurst: interval(|e| e.hurst_hat),
        eta: interval(|e| e.eta_hat),
        lambda: interval(|e| e.lambda_hat),
        block_length: block,
        resamples,
        failed_resamples: resamples - ok.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
