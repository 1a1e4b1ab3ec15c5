use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled real path. `values[k]` sits at time `origin + k * dt` (days).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub dt: f64,
    pub origin: f64,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn new(dt: f64, origin: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("origin", "must be finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("values", "path must contain at least one sample"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite sample at index {k}")));
        }
        Ok(SamplePath { dt, origin, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.dt
    }
}

/// Parameters of a fractional Ornstein-Uhlenbeck process
/// `dY = -λ (Y - mean) dt + η dB^H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FouParams {
    pub hurst: f64,
    pub eta: f64,
    pub lambda: f64,
    pub mean: f64,
}

impl FouParams {
    /// Parameters with the default long-term mean 1/2.
    pub fn new(hurst: f64, eta: f64, lambda: f64) -> Result<Self> {
        Self::with_mean(hurst, eta, lambda, 0.5)
    }

    pub fn with_mean(hurst: f64, eta: f64, lambda: f64, mean: f64) -> Result<Self> {
        let p = FouParams { hurst, eta, lambda, mean };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be finite and > 0, got {}", self.eta)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and > 0, got {}", self.lambda),
            ));
        }
        if !self.mean.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn check_hurst(hurst: f64) -> Result<()> {
    if hurst.is_finite() && hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("hurst", format!("must lie in (0,1), got {hurst}")))
    }
}
