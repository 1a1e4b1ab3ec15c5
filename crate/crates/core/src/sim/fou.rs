//! Stationary fOU paths driven by fGn.

use rand::Rng;

use super::fgn::FgnGenerator;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::types::{FouParams, SamplePath};

/// Time-stepping rule for dY = -λ(Y - mean)dt + η dB^H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Y' = mean + e^{-λdt}(Y - mean) + η e^{-λdt/2} ΔB.
    #[default]
    ExponentialMidpoint,
    /// Y' = Y - λ(Y - mean)dt + η ΔB.
    EulerMaruyama,
}

/// max(⌈10/(λ dt)⌉, 10⁴) steps.
pub fn default_burn_in(lambda: f64, dt: f64) -> usize {
    ((10.0 / (lambda * dt)).ceil() as usize).max(10_000)
}

/// `n` samples of the stationary fOU at spacing `dt`, started at the mean
/// and run through `burn_in` discarded steps (default [`default_burn_in`]).
pub fn gen_fou(
    params: &FouParams,
    n: usize,
    dt: f64,
    seed: u64,
    burn_in: Option<usize>,
) -> Result<SamplePath> {
    gen_fou_with(params, n, dt, seed, burn_in, Scheme::default())
}

pub fn gen_fou_with(
    params: &FouParams,
    n: usize,
    dt: f64,
    seed: u64,
    burn_in: Option<usize>,
    scheme: Scheme,
) -> Result<SamplePath> {
    let values = simulate_fou(params, n, dt, burn_in, scheme, &mut stream(seed, 0))?;
    SamplePath::new(dt, 0.0, values)
}

/// As [`gen_fou_with`] but drawing from a caller-supplied generator.
pub fn simulate_fou<R: Rng + ?Sized>(
    params: &FouParams,
    n: usize,
    dt: f64,
    burn_in: Option<usize>,
    scheme: Scheme,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if dt * params.lambda >= 0.5 {
        return Err(Error::invalid(
            "dt",
            format!("stability guard dt*lambda < 0.5 violated ({})", dt * params.lambda),
        ));
    }
    let burn = burn_in.unwrap_or_else(|| default_burn_in(params.lambda, dt));
    let total = burn + n;
    let mut out = Vec::with_capacity(n);
    let mut y = params.mean;
    if burn == 0 {
        out.push(y);
    }
    if total > 1 {
        let noise = FgnGenerator::new(params.hurst, total - 1)?.sample(rng);
        let scale = params.eta * dt.powf(params.hurst);
        let (decay, gain) = match scheme {
            Scheme::ExponentialMidpoint => {
                let d = (-params.lambda * dt).exp();
                (d, scale * (-0.5 * params.lambda * dt).exp())
            }
            Scheme::EulerMaruyama => (1.0 - params.lambda * dt, scale),
        };
        for (k, z) in noise.iter().enumerate() {
            y = params.mean + decay * (y - params.mean) + gain * z;
            if k + 1 >= burn {
                out.push(y);
            }
        }
    }
    debug_assert_eq!(out.len(), n);
    Ok(out)
}
