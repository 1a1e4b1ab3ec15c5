//! Adaptive Gauss-Kronrod quadrature and Wynn's epsilon algorithm.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights for xgk[1], xgk[3], xgk[5], xgk[7].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

/// One 15-point Kronrod panel on `[a, b]` with the QUADPACK error heuristic.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Integral {
    gk15_abs(f, a, b).0
}

/// As [`gk15`], also returning ∫|f| (sets the round-off floor).
fn gk15_abs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (Integral, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (Integral { value, abs_error: err }, resabs)
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Integral,
    resabs: f64,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error until the summed error is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("interval", "endpoints must be finite"));
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0 });
    }
    let (first, resabs) = gk15_abs(&f, a, b);
    let mut panels = vec![Panel { a, b, est: first, resabs }];
    let mut total = first;
    let mut abs_sum = resabs;
    loop {
        if !total.value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let floor = 100.0 * f64::EPSILON * abs_sum;
        let target = abs_tol.max(rel_tol * total.value.abs()).max(floor);
        if total.abs_error <= target {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature(format!(
                "error {:.3e} above target {:.3e} after {} panels on [{a}, {b}]",
                total.abs_error,
                target,
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.est.abs_error.total_cmp(&y.1.est.abs_error))
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature(format!("panel collapsed near {mid}")));
        }
        for (lo, hi) in [(p.a, mid), (mid, p.b)] {
            let (est, resabs) = gk15_abs(&f, lo, hi);
            panels.push(Panel { a: lo, b: hi, est, resabs });
        }
        // Re-sum rather than update incrementally to avoid drift.
        total = Integral { value: 0.0, abs_error: 0.0 };
        abs_sum = 0.0;
        for p in &panels {
            total.value += p.est.value;
            total.abs_error += p.est.abs_error;
            abs_sum += p.resabs;
        }
    }
}

/// Wynn's epsilon algorithm over a growing sequence of partial sums.
#[derive(Debug, Clone, Default)]
pub struct Epsilon {
    sums: Vec<f64>,
    last: Option<f64>,
}

/// Number of trailing partial sums fed to the epsilon table.
const EPS_WINDOW: usize = 40;

impl Epsilon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, partial_sum: f64) {
        self.sums.push(partial_sum);
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// Current extrapolated limit and an error estimate.
    ///
    /// The error estimate is the gap to the limit returned by the previous call.
    pub fn extrapolate(&mut self) -> Option<Integral> {
        let n = self.sums.len();
        if n < 3 {
            return None;
        }
        let start = n.saturating_sub(EPS_WINDOW);
        let mut prev: Vec<f64> = vec![0.0; n - start + 1];
        let mut cur: Vec<f64> = self.sums[start..].to_vec();
        let mut best = *cur.last().unwrap();
        let mut col = 0usize;
        while cur.len() >= 2 {
            let mut next = Vec::with_capacity(cur.len() - 1);
            let mut broke = false;
            for j in 0..cur.len() - 1 {
                let d = cur[j + 1] - cur[j];
                if d == 0.0 || !d.is_finite() {
                    broke = true;
                    break;
                }
                next.push(prev[j + 1] + 1.0 / d);
            }
            if broke {
                break;
            }
            col += 1;
            if col % 2 == 0 {
                let m = next.len();
                if next[m - 1].is_finite() {
                    best = next[m - 1];
                }
            }
            prev = cur;
            cur = next;
        }
        let gap = self.last.map_or(f64::INFINITY, |l| (best - l).abs());
        self.last = Some(best);
        Some(Integral { value: best, abs_error: gap })
    }
}
