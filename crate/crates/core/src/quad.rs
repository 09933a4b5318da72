//! Adaptive Simpson quadrature and bracketing bisection.

use crate::error::{Error, Result};

pub const QUAD_TOL: f64 = 1e-10;
pub const QUAD_DEPTH: u32 = 40;

/// Integral of `f` over `[a, b]` with breakpoints placed on panel edges.
///
/// Breakpoints outside `(a, b)` are ignored. The absolute tolerance is split
/// across panels in proportion to their length.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, breaks, tol);
    }
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    let width = b - a;
    edges
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], tol * (w[1] - w[0]) / width, QUAD_DEPTH))
        .sum()
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    // A single Simpson panel can be fooled by symmetric integrands; start from
    // a few subpanels before trusting the local error estimate.
    let n = 4;
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    let mut left = fa;
    for k in 0..n {
        let x0 = a + k as f64 * h;
        let x1 = if k + 1 == n { b } else { x0 + h };
        let right = if k + 1 == n { fb } else { f(x1) };
        let xm = 0.5 * (x0 + x1);
        let fxm = f(xm);
        let s = (x1 - x0) / 6.0 * (left + 4.0 * fxm + right);
        total += simpson_step(f, x0, x1, left, fxm, right, s, tol / n as f64, depth);
        left = right;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
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
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::nonconvergence(
            "bisect",
            format!("no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"),
        ));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evenly spaced grid of `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_and_kinked() {
        let v = integrate(|x: f64| x.exp(), 0.0, 2.0, &[], 1e-12);
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-11);
        let k = integrate(|x: f64| (x - 1.0).abs(), 0.0, 3.0, &[1.0], 1e-12);
        assert!((k - 2.5).abs() < 1e-12);
        let s = integrate(|x: f64| (x * 3.0).sin().powi(2), 0.0, std::f64::consts::PI, &[], 1e-12);
        assert!((s - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64 * 0.25).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
