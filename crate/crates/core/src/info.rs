//! Serial information of binarized regularity and the conditional
//! probability that the next regularity value exceeds 1/2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::analytics::fou_autocorrelation;
use crate::error::{Error, Result};
use crate::types::FouParams;

/// Largest |ρ| used before the Gaussian formulas degenerate.
const RHO_CLAMP: f64 = 1.0 - 1e-12;

/// H̃ = 1/2 + arctan(h − 1/2)/π, a bijection ℝ → (0,1) fixing 1/2.
pub fn normalize_hurst(h: f64) -> f64 {
    0.5 + (h - 0.5).atan() / PI
}

/// Inverse of [`normalize_hurst`]: 1/2 + tan(π(x − 1/2)).
pub fn denormalize_hurst(x: f64) -> f64 {
    0.5 + (PI * (x - 0.5)).tan()
}

/// {0,1} symbols obtained by thresholding a series at time scale `source_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySeries {
    pub symbols: Vec<u8>,
    pub source_lag: f64,
}

impl BinarySeries {
    pub fn new(symbols: Vec<u8>, source_lag: f64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("symbols", "binary series must be nonempty"));
        }
        if symbols.iter().any(|&s| s > 1) {
            return Err(Error::invalid("symbols", "alphabet must be {0,1}"));
        }
        if !(source_lag.is_finite() && source_lag > 0.0) {
            return Err(Error::invalid("source_lag", "must be > 0"));
        }
        Ok(BinarySeries { symbols, source_lag })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// 1 where `value > threshold`, else 0 (ties map to 0). `source_lag` is 1.
pub fn binarize_regularity(series: &[f64], threshold: f64) -> Result<BinarySeries> {
    let symbols = series.iter().map(|&v| u8::from(v > threshold)).collect();
    BinarySeries::new(symbols, 1.0)
}

/// Relative frequencies of the 2^L binary words (bit i of the index is the
/// i-th symbol of the word, most recent last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDistribution {
    pub word_length: usize,
    pub probs: Vec<f64>,
}

impl WordDistribution {
    pub fn from_counts(word_length: usize, counts: &[u64]) -> Result<Self> {
        if word_length == 0 || counts.len() != 1usize << word_length {
            return Err(Error::invalid("counts", "need 2^L counts with L >= 1"));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("counts", "no words observed"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(WordDistribution { word_length, probs })
    }

    /// Plug-in distribution of the overlapping length-L words of `b`.
    pub fn from_series(b: &BinarySeries, word_length: usize) -> Result<Self> {
        let mut counts = WordCounts::new(word_length)?;
        counts.add(&b.symbols, 1);
        Self::from_counts(word_length, &counts.counts)
    }
}

/// Shannon entropy in bits with 0·log 0 = 0.
pub fn shannon_entropy(dist: &WordDistribution) -> f64 {
    dist.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Counts of overlapping words, possibly pooled over several series.
#[derive(Debug, Clone, PartialEq)]
pub struct WordCounts {
    pub word_length: usize,
    pub counts: Vec<u64>,
}

impl WordCounts {
    pub fn new(word_length: usize) -> Result<Self> {
        if word_length == 0 || word_length > 24 {
            return Err(Error::invalid("L", format!("word length must be in 1..=24, got {word_length}")));
        }
        Ok(WordCounts { word_length, counts: vec![0; 1 << word_length] })
    }

    /// Adds every word (s[k], s[k+lag], …, s[k+(L−1)lag]).
    pub fn add(&mut self, symbols: &[u8], lag: usize) {
        let span = (self.word_length - 1) * lag;
        if lag == 0 || symbols.len() <= span {
            return;
        }
        for k in 0..symbols.len() - span {
            let mut w = 0usize;
            for i in 0..self.word_length {
                w |= (symbols[k + i * lag] as usize) << i;
            }
            self.counts[w] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// 1 − [E(L words) − E((L−1)-word prefixes)], i.e. 1 minus the
    /// conditional entropy of the last symbol given the preceding ones.
    pub fn serial_information(&self) -> Result<SerialInfoResult> {
        let l = self.word_length;
        if l < 2 {
            return Err(Error::invalid("L", "serial information needs words of length >= 2"));
        }
        let total = self.total();
        if total == 0 {
            return Err(Error::InsufficientData("no complete words".into()));
        }
        let joint = WordDistribution::from_counts(l, &self.counts)?;
        let prefix_mask = (1usize << (l - 1)) - 1;
        let mut prefix = vec![0u64; 1 << (l - 1)];
        for (w, &c) in self.counts.iter().enumerate() {
            prefix[w & prefix_mask] += c;
        }
        let context = WordDistribution::from_counts(l - 1, &prefix)?;
        let cond = shannon_entropy(&joint) - shannon_entropy(&context);
        Ok(SerialInfoResult {
            info: (1.0 - cond).clamp(0.0, 1.0),
            word_length: l - 1,
            n_words: total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerialInfoResult {
    /// Bits, in [0,1].
    pub info: f64,
    /// Context length L.
    pub word_length: usize,
    /// Number of (L+1)-windows counted.
    pub n_words: u64,
}

/// Plug-in serial information I^{L+1} = 1 − E(X_{L+1} | X_1..X_L).
pub fn empirical_serial_information(b: &BinarySeries, l: usize) -> Result<SerialInfoResult> {
    if l == 0 {
        return Err(Error::invalid("L", "must be >= 1"));
    }
    if b.len() < l + 1 {
        return Err(Error::InsufficientData(format!(
            "series of length {} shorter than L+1 = {}",
            b.len(),
            l + 1
        )));
    }
    let mut counts = WordCounts::new(l + 1)?;
    counts.add(&b.symbols, 1);
    counts.serial_information()
}

fn f_log(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        let x = x.clamp(1e-300, 1.0);
        x * x.log2()
    }
}

/// P(next > 1/2 | now > 1/2) = 1/2 + arcsin(ρ)/π for a centred Gaussian pair.
pub fn prob_up_given_up(rho: f64) -> f64 {
    0.5 + rho.clamp(-1.0, 1.0).asin() / PI
}

/// P(next > 1/2 | now ≤ 1/2) = 1/2 − arcsin(ρ)/π.
pub fn prob_up_given_down(rho: f64) -> f64 {
    0.5 - rho.clamp(-1.0, 1.0).asin() / PI
}

/// 1 + f(1/2 − θ/π) + f(1/2 + θ/π), θ = arctan(ρ/√(1−ρ²)), f(x) = x log₂ x.
pub fn serial_info_from_rho(rho: f64) -> Result<f64> {
    let rho = check_rho(rho)?;
    let theta = (rho / (1.0 - rho * rho).sqrt()).atan();
    Ok((1.0 + f_log(0.5 - theta / PI) + f_log(0.5 + theta / PI)).clamp(0.0, 1.0))
}

/// Same quantity through arcsin(ρ) = arctan(ρ/√(1−ρ²)).
pub fn serial_info_from_rho_arcsin(rho: f64) -> Result<f64> {
    let rho = check_rho(rho)?;
    let p = prob_up_given_up(rho);
    Ok((1.0 + f_log(p) + f_log(1.0 - p)).clamp(0.0, 1.0))
}

/// Serial information (L=1) of the binarized stationary fOU at lag product mλ.
pub fn theoretical_serial_info(hurst: f64, mlambda: f64, tol: f64) -> Result<f64> {
    if !(mlambda.is_finite() && mlambda > 0.0) {
        return Err(Error::invalid("mlambda", format!("must be > 0, got {mlambda}")));
    }
    serial_info_from_rho(fou_autocorrelation(hurst, mlambda, tol)?)
}

fn check_rho(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() > 1.0 + 1e-9 {
        return Err(Error::Quadrature(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok(rho.clamp(-RHO_CLAMP, RHO_CLAMP))
}

/// P(Y_{t+m} > 1/2 | Y_t = x) for the stationary fOU, given ρ = ρ(mλ):
/// Φ((mean + ρ(x − mean) − 1/2) / (θ√(1−ρ²))), θ² = η²Γ(2H+1)/(2λ^{2H}).
pub fn conditional_prob_up_with_rho(x: f64, params: &FouParams, rho: f64) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::invalid("x", "must be finite"));
    }
    let rho = check_rho(rho)?;
    if rho == 0.0 && params.mean == 0.5 {
        return Ok(0.5);
    }
    let h = params.hurst;
    let theta = (params.eta * params.eta * gamma(2.0 * h + 1.0) / (2.0 * params.lambda.powf(2.0 * h))).sqrt();
    let z = (params.mean + rho * (x - params.mean) - 0.5) / (theta * (1.0 - rho * rho).sqrt());
    Ok(standard_normal_cdf(z))
}

/// [`conditional_prob_up_with_rho`] with ρ = ρ(H, mλ) from quadrature.
pub fn conditional_prob_up(x: f64, params: &FouParams, mlambda: f64, tol: f64) -> Result<f64> {
    if !(mlambda.is_finite() && mlambda > 0.0) {
        return Err(Error::invalid("mlambda", format!("must be > 0, got {mlambda}")));
    }
    let rho = fou_autocorrelation(params.hurst, mlambda, tol)?;
    conditional_prob_up_with_rho(x, params, rho)
}

/// Conditional probability at the de-normalized point 1/2 + tan(π(x̃ − 1/2)).
pub fn conditional_prob_up_normalized(
    x_tilde: f64,
    params: &FouParams,
    mlambda: f64,
    tol: f64,
) -> Result<f64> {
    check_unit_open(x_tilde)?;
    conditional_prob_up(denormalize_hurst(x_tilde), params, mlambda, tol)
}

/// As [`conditional_prob_up_normalized`] with a precomputed ρ.
pub fn conditional_prob_up_normalized_with_rho(x_tilde: f64, params: &FouParams, rho: f64) -> Result<f64> {
    check_unit_open(x_tilde)?;
    conditional_prob_up_with_rho(denormalize_hurst(x_tilde), params, rho)
}

fn check_unit_open(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("x_tilde", format!("must lie in (0,1), got {x}")))
    }
}

pub(crate) fn standard_normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}
