//! Shared inputs for the kernel benchmarks.

use fsrm_core::sim::{gen_fsrm_prices, FsrmConfig};
use fsrm_core::{FouParams, SamplePath};

/// FSRM log-prices with rough, strongly persistent regularity.
pub fn fsrm_prices(days: usize, r: usize, seed: u64) -> SamplePath {
    let fou = FouParams::new(0.8, 0.08, 0.05).expect("valid parameters");
    let cfg = FsrmConfig::new(fou, 0.01, r, days, seed).expect("valid config");
    gen_fsrm_prices(&cfg).expect("simulation succeeds").log_prices
}

/// Gaussian-looking deterministic series for BDS timing.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    fsrm_core::gen_fgn(0.5, n, 1.0, 1.0, seed).expect("fgn")
}
