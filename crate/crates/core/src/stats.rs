//! Exact binomial test, BDS independence test, descriptive statistics.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// One-sided upper tail P(X ≥ hits) for X ~ Binomial(n, 1/2).
pub fn binomial_test(hits: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if hits > n {
        return Err(Error::invalid("hits", format!("{hits} exceeds n = {n}")));
    }
    if hits == 0 {
        return Ok(1.0);
    }
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    // Sum from the far tail inwards so small terms are not absorbed.
    let mut p = 0.0;
    for k in (hits..=n).rev() {
        let term = (ln_binomial(n, k) - ln_half_n).exp();
        p += term;
        if term < p * 1e-17 && k < n / 2 {
            break;
        }
    }
    Ok(p.min(1.0))
}

/// BDS statistics at embedding dimensions 2..=dim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdsResult {
    pub epsilon: f64,
    pub dims: Vec<usize>,
    pub statistics: Vec<f64>,
    pub pvalues: Vec<f64>,
}

impl BdsResult {
    /// p-value at the largest dimension.
    pub fn pvalue(&self) -> f64 {
        *self.pvalues.last().expect("at least one dimension")
    }

    pub fn statistic(&self) -> f64 {
        *self.statistics.last().expect("at least one dimension")
    }
}

/// Brock-Dechert-Scheinkman test of the i.i.d. hypothesis.
///
/// Pairs are "close" when |x_i − x_j| < ε with ε = `eps_factor` · sd(x).
/// W_m = √(n−m+1) (C_m − C_1^m) / σ_m, two-sided normal p-values.
pub fn bds_test(series: &[f64], dim: usize, eps_factor: f64) -> Result<BdsResult> {
    let n = series.len();
    check_bds_args(n, dim, eps_factor)?;
    let eps = bds_epsilon(series, eps_factor)?;
    let Counts { close_m, trimmed, row_sum } = correlation_counts(series, dim, eps);
    let c1 = close_m[1] as f64 / pairs(n);
    if c1 <= 0.0 || c1 >= 1.0 {
        return Err(Error::DegenerateCorrelation(format!("C_1 = {c1} at epsilon = {eps}")));
    }
    let nf = n as f64;
    let sum_sq: f64 = row_sum.iter().map(|&s| (s as f64) * (s as f64)).sum();
    let total: f64 = row_sum.iter().map(|&s| s as f64).sum();
    let k = (sum_sq - 3.0 * total + 2.0 * nf) / (nf * (nf - 1.0) * (nf - 2.0));

    let mut dims = Vec::new();
    let mut statistics = Vec::new();
    let mut pvalues = Vec::new();
    for m in 2..=dim {
        let mf = m as f64;
        let mut mid = 0.0;
        for j in 1..m {
            mid += k.powi((m - j) as i32) * c1.powi(2 * j as i32);
        }
        let var = 4.0
            * (k.powi(m as i32) + 2.0 * mid + (mf - 1.0).powi(2) * c1.powi(2 * m as i32)
                - mf * mf * k * c1.powi(2 * m as i32 - 2));
        if !(var > 0.0) {
            return Err(Error::DegenerateCorrelation(format!("variance {var} at m = {m}")));
        }
        let len = n - m + 1;
        let cm = close_m[m] as f64 / pairs(len);
        let c1_trim = trimmed[m] as f64 / pairs(len);
        let w = (len as f64).sqrt() * (cm - c1_trim.powi(m as i32)) / var.sqrt();
        dims.push(m);
        statistics.push(w);
        pvalues.push(erfc(w.abs() / std::f64::consts::SQRT_2).min(1.0));
    }
    Ok(BdsResult { epsilon: eps, dims, statistics, pvalues })
}

fn check_bds_args(n: usize, dim: usize, eps_factor: f64) -> Result<()> {
    if n < 50 {
        return Err(Error::InsufficientData(format!("BDS needs at least 50 points, got {n}")));
    }
    if dim < 2 || dim >= n / 2 {
        return Err(Error::invalid("dim", format!("must be in 2..n/2, got {dim}")));
    }
    if !(eps_factor.is_finite() && eps_factor > 0.0) {
        return Err(Error::invalid("eps_factor", "must be > 0"));
    }
    Ok(())
}

fn bds_epsilon(series: &[f64], eps_factor: f64) -> Result<f64> {
    let eps = eps_factor * describe(series)?.std;
    if !(eps > 0.0) {
        return Err(Error::DegenerateCorrelation("zero sample variance".into()));
    }
    Ok(eps)
}

struct Counts {
    close_m: Vec<u64>,
    trimmed: Vec<u64>,
    row_sum: Vec<u64>,
}

/// One pass over diagonals d = j − i. close_m[m] counts windows of m
/// consecutive close pairs; trimmed[m] counts close pairs with i ≥ m−1.
fn correlation_counts(series: &[f64], dim: usize, eps: f64) -> Counts {
    let n = series.len();
    let mut close_m = vec![0u64; dim + 1];
    let mut trimmed = vec![0u64; dim + 1];
    let mut row_sum = vec![1u64; n];
    for d in 1..n {
        let mut run = 0usize;
        for i in 0..n - d {
            if (series[i] - series[i + d]).abs() < eps {
                run += 1;
                row_sum[i] += 1;
                row_sum[i + d] += 1;
                for m in 1..=dim {
                    if i + 1 >= m {
                        trimmed[m] += 1;
                    }
                }
                for m in 1..=dim.min(run) {
                    close_m[m] += 1;
                }
            } else {
                run = 0;
            }
        }
    }
    Counts { close_m, trimmed, row_sum }
}

fn pairs(len: usize) -> f64 {
    (len as f64) * (len as f64 - 1.0) / 2.0
}

/// C_m − C_{1,m}^m, the numerator of the BDS statistic at dimension m.
fn bds_excess(close_m: u64, trimmed: u64, n: usize, m: usize) -> f64 {
    let len = n - m + 1;
    close_m as f64 / pairs(len) - (trimmed as f64 / pairs(len)).powi(m as i32)
}

/// Same excess for a 0/1 series, where closeness means equality: close
/// m-histories are pairs of equal m-words.
fn binary_excess(bits: &[u8], m: usize, words: &mut [u64]) -> f64 {
    let n = bits.len();
    words.iter_mut().for_each(|c| *c = 0);
    let mask = (1usize << m) - 1;
    let mut w = 0usize;
    for (k, &b) in bits.iter().enumerate() {
        w = ((w << 1) | b as usize) & mask;
        if k + 1 >= m {
            words[w] += 1;
        }
    }
    let close: u64 = words.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let ones = bits[m - 1..].iter().filter(|&&b| b == 1).count() as u64;
    let zeros = (n - m + 1) as u64 - ones;
    let trimmed = ones * ones.saturating_sub(1) / 2 + zeros * zeros.saturating_sub(1) / 2;
    bds_excess(close, trimmed, n, m)
}

/// BDS excess at dimension `dim` calibrated against random permutations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdsPermutation {
    pub epsilon: f64,
    pub dim: usize,
    /// Observed C_m − C_{1,m}^m.
    pub excess: f64,
    /// Two-sided, (1 + #as-extreme) / (1 + permutations) per tail.
    pub pvalue: f64,
    pub permutations: usize,
}

/// Permutation version of [`bds_test`]. Shuffling preserves the marginal
/// exactly, so the p-value stays valid for discrete data (such as 0/1 hit
/// indicators) where the asymptotic variance degenerates. Two-valued series
/// are counted in O(n) per permutation; others cost O(n²) each.
pub fn bds_permutation_test(
    series: &[f64],
    dim: usize,
    eps_factor: f64,
    permutations: usize,
    seed: u64,
) -> Result<BdsPermutation> {
    let n = series.len();
    check_bds_args(n, dim, eps_factor)?;
    if permutations == 0 {
        return Err(Error::invalid("permutations", "must be >= 1"));
    }
    let eps = bds_epsilon(series, eps_factor)?;
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let two_valued = series.iter().all(|&x| x == lo || x == hi);
    if two_valued && eps > hi - lo {
        return Err(Error::DegenerateCorrelation(format!("every pair within epsilon = {eps}")));
    }

    let mut rng = crate::rng::stream(seed, 0);
    let (observed, null): (f64, Vec<f64>) = if two_valued && dim <= 20 {
        let mut bits: Vec<u8> = series.iter().map(|&x| u8::from(x == hi)).collect();
        let mut words = vec![0u64; 1 << dim];
        let observed = binary_excess(&bits, dim, &mut words);
        let null = (0..permutations)
            .map(|_| {
                bits.shuffle(&mut rng);
                binary_excess(&bits, dim, &mut words)
            })
            .collect();
        (observed, null)
    } else {
        let excess = |x: &[f64]| {
            let c = correlation_counts(x, dim, eps);
            bds_excess(c.close_m[dim], c.trimmed[dim], n, dim)
        };
        let observed = excess(series);
        let mut x = series.to_vec();
        let null = (0..permutations)
            .map(|_| {
                x.shuffle(&mut rng);
                excess(&x)
            })
            .collect();
        (observed, null)
    };
    let above = null.iter().filter(|&&v| v >= observed).count();
    let below = null.iter().filter(|&&v| v <= observed).count();
    let tail = |k: usize| (1 + k) as f64 / (1 + permutations) as f64;
    Ok(BdsPermutation {
        epsilon: eps,
        dim,
        excess: observed,
        pvalue: (2.0 * tail(above).min(tail(below))).min(1.0),
        permutations,
    })
}

/// Sample moments of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    /// m₃ / m₂^{3/2}.
    pub skewness: f64,
    /// m₄ / m₂² (3 for a Gaussian).
    pub kurtosis: f64,
}

pub fn describe(x: &[f64]) -> Result<Descriptive> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two values".into()));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, kurtosis) =
        if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2)) } else { (f64::NAN, f64::NAN) };
    Ok(Descriptive { n, mean, std, skewness, kurtosis })
}
