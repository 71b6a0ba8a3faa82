//! One-dimensional quadrature: Gauss–Legendre rules and adaptive Simpson.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes and weights mapped onto `[lo, hi]`.
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Composite Gauss–Legendre: `panels` equal panels of `order` nodes each.
pub fn composite_gauss<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    panels: usize,
    order: usize,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        let mid = a + 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`. The interval is
/// first cut into a fixed number of panels so that narrow peaks are not
/// missed by the initial five-point estimate.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const PANELS: usize = 32;
    let h = (hi - lo) / PANELS as f64;
    let mut total = 0.0;
    let mut fa = f(lo);
    for i in 0..PANELS {
        let a = lo + i as f64 * h;
        let b = if i + 1 == PANELS { hi } else { a + h };
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 40);
        fa = fb;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Half-width of an interval around the origin outside of which
/// `exp(log_weight)` has fallen below `exp(-cutoff)` relative to its peak
/// on a coarse scan. Assumes `log_weight → -∞` at infinity.
pub fn effective_support<F: Fn(f64) -> f64>(log_weight: F, cutoff: f64) -> f64 {
    let scan: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
    let peak = scan.iter().map(|&x| log_weight(x)).fold(f64::NEG_INFINITY, f64::max);
    let mut r = 1.0;
    while r < 1e6 && (log_weight(r) > peak - cutoff || log_weight(-r) > peak - cutoff) {
        r *= 1.25;
    }
    r
}

/// Ratio `∫ f·w / ∫ w` for the one-dimensional weight `w = exp(log_weight)`.
pub fn weighted_mean_1d<L, F>(log_weight: L, f: F, tol: f64) -> f64
where
    L: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    let r = effective_support(&log_weight, 60.0);
    let shift = (-4000..=4000)
        .map(|i| log_weight(i as f64 * r / 4000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let z = adaptive_simpson(|x| (log_weight(x) - shift).exp(), -r, r, tol);
    let num = adaptive_simpson(|x| f(x) * (log_weight(x) - shift).exp(), -r, r, tol);
    num / z
}
