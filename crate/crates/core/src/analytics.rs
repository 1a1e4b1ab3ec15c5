//! Stationary fOU analytics.
//!
//! Var(Y) = η² Γ(2H+1) / (2 λ^{2H})
//!
//! ρ(sλ) = (2 sin πH / π) ∫₀^∞ cos(sλ x) x^{1-2H} / (1+x²) dx
//!
//! With t = sλ·x and a = sλ the integral becomes
//! a^{2H} ∫₀^∞ cos t · t^{1-2H} / (a²+t²) dt, integrated piecewise:
//! `[0, min(a,π)]` after t = u^{1/(2-2H)} (removes the t^{1-2H} endpoint
//! behaviour), `[min(a,π), π]` on geometric breakpoints, then half-periods
//! `[kπ, (k+1)π]` summed with Wynn-epsilon acceleration.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{integrate, Epsilon};
use crate::types::{check_hurst, FouParams};

/// Default absolute tolerance on ρ.
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_CYCLES: usize = 4000;
const MAX_PANELS: usize = 400;
const GEOMETRIC_RATIO: f64 = 4.0;

/// ρ sampled on an increasing grid of sλ values for one H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub hurst: f64,
    pub product_grid: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Minimum of ρ over lags in `[0, s_max]` (λ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagMinResult {
    pub hurst: f64,
    pub s_star: f64,
    pub rho_min: f64,
}

pub fn fou_variance(params: &FouParams) -> f64 {
    let h = params.hurst;
    params.eta * params.eta * gamma(2.0 * h + 1.0) / (2.0 * params.lambda.powf(2.0 * h))
}

/// Autocorrelation of the stationary fOU at lag product `slambda = sλ`.
pub fn fou_autocorrelation(hurst: f64, slambda: f64, tol: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if !(slambda.is_finite() && slambda >= 0.0) {
        return Err(Error::invalid("slambda", format!("must be finite and >= 0, got {slambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    if slambda == 0.0 {
        return Ok(1.0);
    }
    let a = slambda;
    let prefactor = 2.0 * (PI * hurst).sin() / PI * a.powf(2.0 * hurst);
    if prefactor == 0.0 || !prefactor.is_finite() {
        return Err(Error::Quadrature(format!("prefactor underflow at slambda={a}")));
    }
    // Absolute tolerance on the scaled integral J with ρ = prefactor · J.
    let tol_j = tol / prefactor;
    let j = scaled_integral(hurst, a, tol_j)?;
    let rho = prefactor * j;
    if !rho.is_finite() || rho.abs() > 1.0 + 1e-9 {
        return Err(Error::Quadrature(format!(
            "autocorrelation {rho} outside [-1, 1] at H={hurst}, slambda={a}"
        )));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// ∫₀^∞ cos t · t^{1-2H} / (a²+t²) dt to absolute accuracy `tol_j`.
fn scaled_integral(hurst: f64, a: f64, tol_j: f64) -> Result<f64> {
    let p = 1.0 - 2.0 * hurst;
    let a2 = a * a;
    let piece_tol = tol_j * 1e-2;

    // [0, c] with t = u^{1/(2-2H)}: t^{1-2H} dt = du / (2-2H).
    let c = a.min(PI);
    let q = 2.0 - 2.0 * hurst;
    let inv_q = 1.0 / q;
    let head = integrate(
        |u: f64| {
            let t = u.powf(inv_q);
            t.cos() / (a2 + t * t) * inv_q
        },
        0.0,
        c.powf(q),
        piece_tol,
        1e-13,
        MAX_PANELS,
    )?;
    let mut total = head.value;

    let g = |t: f64| t.cos() * t.powf(p) / (a2 + t * t);

    // [c, π] on geometric breakpoints c·4^k.
    let mut lo = c;
    while lo < PI {
        let hi = (lo * GEOMETRIC_RATIO).min(PI);
        total += integrate(g, lo, hi, piece_tol, 1e-13, MAX_PANELS)?.value;
        lo = hi;
    }

    // Half-period tail with epsilon acceleration.
    let mut eps = Epsilon::new();
    let mut tail = 0.0;
    let mut stable = 0usize;
    for k in 1..=MAX_CYCLES {
        let lo = k as f64 * PI;
        let term = integrate(g, lo, lo + PI, piece_tol, 1e-13, MAX_PANELS)?.value;
        tail += term;
        if term.abs() < tol_j * 1e-3 {
            return Ok(total + tail);
        }
        eps.push(tail);
        if let Some(ext) = eps.extrapolate() {
            if k >= 6 && ext.abs_error < tol_j * 0.1 {
                stable += 1;
                if stable >= 2 {
                    return Ok(total + ext.value);
                }
            } else {
                stable = 0;
            }
        }
    }
    Err(Error::Quadrature(format!(
        "oscillatory tail did not converge after {MAX_CYCLES} half-periods (H={hurst}, a={a})"
    )))
}

/// Autocovariance Var(Y) · ρ(λs).
pub fn fou_autocovariance(params: &FouParams, s: f64, tol: f64) -> Result<f64> {
    params.validate()?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::invalid("s", format!("must be finite and >= 0, got {s}")));
    }
    Ok(fou_variance(params) * fou_autocorrelation(params.hurst, params.lambda * s, tol)?)
}

/// ρ over `grid` (values of sλ), evaluated in parallel.
pub fn correlation_curve(hurst: f64, grid: &[f64], tol: f64) -> Result<CorrelationCurve> {
    check_hurst(hurst)?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("product_grid", "must be strictly increasing"));
    }
    let rho = grid
        .par_iter()
        .map(|&x| fou_autocorrelation(hurst, x, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve { hurst, product_grid: grid.to_vec(), rho })
}

/// Grid argmin of ρ over lags `k·step ∈ [0, s_max]` (λ = 1), refined by
/// bisection on the sign of a central-difference derivative.
pub fn min_autocorrelation(hurst: f64, s_max: f64, step: f64, tol: f64) -> Result<LagMinResult> {
    check_hurst(hurst)?;
    if !(step > 0.0 && step < s_max && s_max.is_finite()) {
        return Err(Error::invalid("step", format!("need 0 < step < s_max, got {step}, {s_max}")));
    }
    let n = (s_max / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
    let curve = correlation_curve(hurst, &grid, tol)?;
    let (imin, &grid_min) = curve
        .rho
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty grid");
    let s_grid = grid[imin];
    if imin == 0 || imin + 1 == grid.len() {
        return Ok(LagMinResult { hurst, s_star: s_grid, rho_min: grid_min });
    }

    let fine_tol = tol.min(1e-11);
    let h = step * 1e-2;
    let slope = |s: f64| -> Result<f64> {
        Ok(fou_autocorrelation(hurst, s + h, fine_tol)? - fou_autocorrelation(hurst, s - h, fine_tol)?)
    };
    let (mut lo, mut hi) = (grid[imin - 1], grid[imin + 1]);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s_ref = 0.5 * (lo + hi);
    let rho_ref = fou_autocorrelation(hurst, s_ref, fine_tol)?;
    if rho_ref <= grid_min {
        Ok(LagMinResult { hurst, s_star: s_ref, rho_min: rho_ref })
    } else {
        Ok(LagMinResult { hurst, s_star: s_grid, rho_min: grid_min })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma_ur;

    /// Independent route: for a > 0,
    /// ρ(a) = ½eᵃQ(2H,a) + ½e^{-a}[1 − Γ(2H)^{-1}∫₀ᵃ eᵘu^{2H−1}du].
    fn rho_closed_form(h: f64, a: f64) -> f64 {
        let nu = 2.0 * h;
        let mut series = 0.0;
        let mut fact = 1.0;
        for n in 0..400 {
            if n > 0 {
                fact *= n as f64;
            }
            let term = a.powf(n as f64 + nu) / (fact * (n as f64 + nu));
            series += term;
            if n > 5 && term < 1e-18 * series {
                break;
            }
        }
        0.5 * a.exp() * gamma_ur(nu, a) + 0.5 * (-a).exp() * (1.0 - series / gamma(nu))
    }

    #[test]
    fn closed_form_oracle_spot_values() {
        // frozen from an independent scipy evaluation
        assert!((rho_closed_form(0.8, 1.0) - 0.765905).abs() < 1e-6);
        assert!((rho_closed_form(0.3, 1.0) - 0.1381810).abs() < 1e-6);
        assert!((rho_closed_form(0.5, 2.0) - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        let v = |h, e, l| fou_variance(&FouParams::new(h, e, l).unwrap());
        assert!((v(0.5, 1.0, 1.0) - 0.5).abs() < 1e-14);
        assert!((v(0.5, 2.0, 1.0) - 2.0).abs() < 1e-13);
        assert!((v(0.3, 1.0, 1.0) - 0.446_757_674_6).abs() < 1e-9);
    }

    #[test]
    fn zero_lag_is_one() {
        for h in [0.1, 0.5, 0.9] {
            assert_eq!(fou_autocorrelation(h, 0.0, DEFAULT_TOL).unwrap(), 1.0);
        }
    }

    #[test]
    fn brownian_case_matches_exponential() {
        for s in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let r = fou_autocorrelation(0.5, s, DEFAULT_TOL).unwrap();
            assert!((r - (-s).exp()).abs() < 1e-8, "s={s} r={r}");
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &h in &[0.05, 0.1, 0.25, 0.3, 0.45, 0.55, 0.7, 0.8, 0.95] {
            for &a in &[0.01, 0.1, 0.5, 1.0, 2.0, 3.1, 5.0, 10.0] {
                let q = fou_autocorrelation(h, a, DEFAULT_TOL).unwrap();
                let c = rho_closed_form(h, a);
                assert!((q - c).abs() < 1e-7, "H={h} a={a} quad={q} closed={c}");
            }
        }
    }

    #[test]
    fn tiny_products_stay_below_one() {
        for &h in &[0.02, 0.3, 0.8] {
            let mut last = 1.0;
            for &a in &[1e-25, 1e-12, 1e-6, 1e-3] {
                let r = fou_autocorrelation(h, a, DEFAULT_TOL).unwrap();
                assert!(r <= 1.0 && r > 0.0, "H={h} a={a} r={r}");
                assert!(r <= last + 1e-9);
                last = r;
            }
        }
        let r = fou_autocorrelation(0.5, 1e-6, DEFAULT_TOL).unwrap();
        assert!((r - (-1e-6f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn autocovariance_examples() {
        let p = FouParams::new(0.5, 1.0, 1.0).unwrap();
        assert!((fou_autocovariance(&p, 0.0, DEFAULT_TOL).unwrap() - 0.5).abs() < 1e-14);
        let c = fou_autocovariance(&p, 2.0, DEFAULT_TOL).unwrap();
        assert!((c - 0.5 * (-2f64).exp()).abs() < 1e-8);
        assert!((c - 0.06767).abs() < 1e-5);
        let q = FouParams::new(0.25, 1.0, 1.0).unwrap();
        let c = fou_autocovariance(&q, 3.0, DEFAULT_TOL).unwrap();
        let r = fou_autocorrelation(0.25, 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(c.signum(), r.signum());
        assert!(r < 0.0);
    }

    #[test]
    fn covariance_depends_on_product_only() {
        let a = FouParams::new(0.3, 1.7, 2.0).unwrap();
        let b = FouParams::new(0.3, 1.7, 1.0).unwrap();
        let ra = fou_autocorrelation(0.3, a.lambda * 1.0, DEFAULT_TOL).unwrap();
        let rb = fou_autocorrelation(0.3, b.lambda * 2.0, DEFAULT_TOL).unwrap();
        assert_eq!(ra, rb);
        let c1 = fou_autocovariance(&a, 1.0, DEFAULT_TOL).unwrap();
        let c2 = fou_autocovariance(&FouParams::new(0.3, 3.4, 2.0).unwrap(), 1.0, DEFAULT_TOL)
            .unwrap();
        assert!((c2 / c1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn anti_persistent_dip() {
        let grid: Vec<f64> = (1..=1000).map(|k| k as f64 * 0.01).collect();
        let c = correlation_curve(0.25, &grid, DEFAULT_TOL).unwrap();
        assert!(c.rho.iter().any(|&r| r < 0.0));
        assert!(c.rho.iter().all(|r| r.abs() <= 1.0));
    }

    #[test]
    fn lag_min_examples() {
        let m = min_autocorrelation(0.5, 10.0, 0.01, DEFAULT_TOL).unwrap();
        assert!(m.rho_min >= 0.0);
        let m = min_autocorrelation(0.25, 10.0, 0.01, DEFAULT_TOL).unwrap();
        // oracle: closed form minimum -0.0369270514 at a = 3.0953918
        let oracle = (300..320)
            .map(|k| rho_closed_form(0.25, k as f64 * 0.01))
            .fold(f64::INFINITY, f64::min);
        assert!((m.rho_min - (-0.036_927_051_4)).abs() < 1e-9, "{m:?}");
        assert!(m.rho_min <= oracle + 1e-8);
        assert!((m.s_star - 3.095_391_8).abs() < 1e-3, "{m:?}");
    }

    #[test]
    fn bad_inputs() {
        assert!(fou_autocorrelation(0.0, 1.0, 1e-8).is_err());
        assert!(fou_autocorrelation(0.5, -1.0, 1e-8).is_err());
        assert!(fou_autocorrelation(0.5, 1.0, 0.0).is_err());
        assert!(min_autocorrelation(0.3, 1.0, 2.0, 1e-8).is_err());
    }
}
