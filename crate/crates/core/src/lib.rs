//! Fractional stochastic regularity model toolchain.
//!
//! Log-prices are modelled as a multifractional process whose pointwise
//! regularity follows a fractional Ornstein-Uhlenbeck (fOU) process.
//!
//! - [`sim`]: fGn / fBm / fOU / synthetic intraday price paths
//! - [`analytics`]: stationary fOU variance and autocorrelation
//! - [`info`]: serial information of binarized regularity, forecast probability
//! - [`estimators`]: local Hurst exponents and fOU parameter fits
//! - [`forecast`]: filtered sign forecasts and their evaluation
//! - [`stats`]: binomial and BDS tests, descriptive statistics
//! - [`io`], [`pipeline`]: CSV/JSON artifacts and the end-to-end run

pub mod analytics;
pub mod error;
pub mod estimators;
pub mod forecast;
pub mod info;
pub mod io;
pub mod pipeline;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stats;
mod types;

pub use analytics::{
    correlation_curve, fou_autocorrelation, fou_autocovariance, fou_variance, min_autocorrelation,
    CorrelationCurve, LagMinResult, DEFAULT_TOL,
};
pub use error::{Error, ErrorKind, Result};
pub use estimators::{
    estimate_fou, hurst_series, local_hurst, max_window, FouEstimate, RegularitySeries,
};
pub use forecast::{
    evaluate, filter_state, hit_rate, run_forecast, EvaluationReport, ForecastRun, ForecastSignal,
    HitRate, Sign,
};
pub use info::{
    binarize_regularity, conditional_prob_up, conditional_prob_up_normalized,
    denormalize_hurst, empirical_serial_information, normalize_hurst, shannon_entropy,
    theoretical_serial_info, BinarySeries, SerialInfoResult, WordDistribution,
};
pub use sim::{gen_fbm, gen_fgn, gen_fou, gen_fsrm_prices, FsrmConfig, FsrmSample, Scheme};
pub use stats::{bds_permutation_test, bds_test, binomial_test, BdsPermutation, BdsResult};
pub use types::{FouParams, SamplePath};
