//! Shared numerical kernels: compensated summation, the gaussian CDF, and
//! 1-D minimization.
//!
//! Pair statistics accumulate O(n²) terms and are checked against exact
//! identities at 1e-12, so every pair loop in this crate sums through
//! [`CompensatedSum`] in a fixed iteration order.

// Rational-fit coefficients and reference vectors are kept at the
// generator's full precision.
#![allow(clippy::excessive_precision)]

/// Neumaier (Kahan–Babuška) compensated accumulator.
///
/// The running error of the naive sum is folded into a correction term, so
/// the result is faithful to the exact sum up to one final rounding even
/// over millions of terms of mixed sign.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum an iterator with compensation.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean with compensation; 0 on empty input.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    csum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (divisor n-1); 0 for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    csum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

// ---------------------------------------------------------------------------
// Error function and gaussian CDF
// ---------------------------------------------------------------------------

// Rational coefficients from W. J. Cody's Chebyshev fits ("Rational Chebyshev
// approximation for the error function", Math. Comp. 23, 1969), the same
// fits used by SPECFUN's CALERF. Max relative error ~1e-16 per branch.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const ONE_OVER_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;
const ERF_THRESH: f64 = 0.46875;

/// erfc(x) for x > ERF_THRESH via the two upper Cody branches.
fn erfc_upper(y: f64) -> f64 {
    let result = if y <= 4.0 {
        let mut num = ERFC_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERFC_C[i]) * y;
            den = (den + ERFC_D[i]) * y;
        }
        (num + ERFC_C[7]) / (den + ERFC_D[7])
    } else if y < 26.543 {
        let ysq = 1.0 / (y * y);
        let mut num = ERFC_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERFC_P[i]) * ysq;
            den = (den + ERFC_Q[i]) * ysq;
        }
        let r = ysq * (num + ERFC_P[4]) / (den + ERFC_Q[4]);
        (ONE_OVER_SQRT_PI - r) / y
    } else {
        return 0.0;
    };
    // Split exp(-y^2) to avoid cancellation in the argument.
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * result
}

/// The error function, accurate to ~1 ulp over the full range.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= ERF_THRESH {
        let ysq = if y > 1e-300 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + ERF_A[i]) * ysq;
            den = (den + ERF_B[i]) * ysq;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else {
        let t = 1.0 - erfc_upper(y);
        if x < 0.0 {
            -t
        } else {
            t
        }
    }
}

/// The complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= ERF_THRESH {
        1.0 - erf(x)
    } else if x < 0.0 {
        2.0 - erfc_upper(y)
    } else {
        erfc_upper(y)
    }
}

/// Standard gaussian CDF Φ(x) = erfc(-x/√2)/2, absolute error below 1e-15.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

// ---------------------------------------------------------------------------
// 1-D minimization
// ---------------------------------------------------------------------------

/// Golden-section minimization of a unimodal function on [a, b].
///
/// Shrinks the bracket below `tol` and returns (argmin, min). The function
/// is also evaluated at both endpoints so boundary minima are not missed.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    debug_assert!(b >= a);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let mut best = (xm, f(xm));
    for (x, v) in [(a, f(a)), (b, f(b))] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Minimize a convex function on [a, b]: a coarse grid pass brackets the
/// minimum, golden-section refines it.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    grid: usize,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(grid >= 2);
    let step = (b - a) / grid as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..=grid {
        let v = f(a + step * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = a + step * (best_i + 1).min(grid) as f64;
    golden_section(f, lo, hi, tol)
}

/// Least-squares slope of y against x; 0 if fewer than two points.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxy = csum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = csum(xs.iter().map(|x| (x - mx) * (x - mx)));
    sxy / sxx
}
