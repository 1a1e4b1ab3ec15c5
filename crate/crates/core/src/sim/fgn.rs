//! Fractional Gaussian noise by circulant embedding (Davies-Harte), with a
//! Cholesky fallback.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::types::check_hurst;

/// Below this length the exact Cholesky factor is cheaper than an FFT plan.
const CHOLESKY_BELOW: usize = 32;
/// Largest length for which the O(n²) Cholesky fallback is attempted.
const CHOLESKY_MAX: usize = 8192;
/// Embedding doublings tried before falling back.
const MAX_EMBED_DOUBLINGS: u32 = 4;

/// Unit-variance fGn autocovariance ½(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H}).
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let prev = if k == 0.0 { 1.0 } else { (k - 1.0).powf(h2) };
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + prev)
}

enum Method {
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Cholesky { lower: Vec<f64> },
}

/// Reusable sampler of `n` unit-spacing, unit-variance fGn values.
pub struct FgnGenerator {
    n: usize,
    method: Method,
}

impl FgnGenerator {
    pub fn new(hurst: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if n < CHOLESKY_BELOW {
            return Ok(FgnGenerator { n, method: cholesky(hurst, n)? });
        }
        let mut m = (2 * (n - 1)).next_power_of_two();
        let mut planner = FftPlanner::new();
        for _ in 0..=MAX_EMBED_DOUBLINGS {
            if let Some(sqrt_eig) = embedding(hurst, m, &mut planner) {
                let fft = planner.plan_fft_forward(m);
                return Ok(FgnGenerator { n, method: Method::Circulant { sqrt_eig, fft } });
            }
            m *= 2;
        }
        if n <= CHOLESKY_MAX {
            log::warn!("circulant embedding not nonnegative for H={hurst}, n={n}; using Cholesky");
            return Ok(FgnGenerator { n, method: cholesky(hurst, n)? });
        }
        Err(Error::Quadrature(format!(
            "circulant embedding failed for H={hurst}, n={n} and n too large for Cholesky"
        )))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Fills `out` (length `n`) with one fGn draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.n, "output length must match generator length");
        match &self.method {
            Method::Circulant { sqrt_eig, fft } => {
                let m = sqrt_eig.len();
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                debug_assert_eq!(buf.len(), m);
                fft.process(&mut buf);
                for (o, z) in out.iter_mut().zip(&buf) {
                    *o = z.re;
                }
            }
            Method::Cholesky { lower } => {
                let n = self.n;
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..n {
                    let row = &lower[i * n..i * n + i + 1];
                    out[i] = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.sample_into(rng, &mut out);
        out
    }
}

/// √(λ_k / m) for the circulant of size `m`, or `None` if an eigenvalue is
/// materially negative.
fn embedding(hurst: f64, m: usize, planner: &mut FftPlanner<f64>) -> Option<Vec<f64>> {
    let half = m / 2;
    let mut c: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let k = if j <= half { j } else { m - j };
            Complex::new(fgn_autocovariance(hurst, k), 0.0)
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut c);
    let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
    if c.iter().any(|z| z.re < -1e-10 * max) {
        return None;
    }
    Some(c.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect())
}

fn cholesky(hurst: f64, n: usize) -> Result<Method> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = gamma[i - j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Quadrature(format!(
                        "fGn covariance not positive definite at order {i} (H={hurst})"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(Method::Cholesky { lower: l })
}
