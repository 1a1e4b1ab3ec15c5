//! Path simulation: fGn, fBm, fOU and synthetic intraday FSRM prices.

mod fgn;
mod fou;
mod fsrm;

pub use fgn::{fgn_autocovariance, FgnGenerator};
pub use fou::{default_burn_in, gen_fou, gen_fou_with, simulate_fou, Scheme};
pub use fsrm::{gen_fsrm_prices, FsrmConfig, FsrmSample, DEFAULT_CROSS_DAY_MEMORY, DEFAULT_MAX_SAMPLES};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::types::SamplePath;

/// `n` fGn increments with covariance C² dt^{2H} γ(k).
pub fn gen_fgn(hurst: f64, n: usize, dt: f64, scale_c: f64, seed: u64) -> Result<Vec<f64>> {
    check_scale(dt, scale_c)?;
    let g = FgnGenerator::new(hurst, n)?;
    let mut x = g.sample(&mut stream(seed, 0));
    let s = scale_c * dt.powf(hurst);
    x.iter_mut().for_each(|v| *v *= s);
    Ok(x)
}

/// fBm sampled at `0, dt, …, (n-1)dt`: running sum of `gen_fgn(n-1)` from 0.
pub fn gen_fbm(hurst: f64, n: usize, dt: f64, scale_c: f64, seed: u64) -> Result<SamplePath> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    crate::types::check_hurst(hurst)?;
    check_scale(dt, scale_c)?;
    let mut values = Vec::with_capacity(n);
    values.push(0.0);
    if n > 1 {
        let mut acc = 0.0;
        for dx in gen_fgn(hurst, n - 1, dt, scale_c, seed)? {
            acc += dx;
            values.push(acc);
        }
    }
    SamplePath::new(dt, 0.0, values)
}

fn check_scale(dt: f64, scale_c: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(scale_c.is_finite() && scale_c > 0.0) {
        return Err(Error::invalid("scale_c", format!("must be > 0, got {scale_c}")));
    }
    Ok(())
}
