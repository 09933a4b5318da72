//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here goes through the closed forms of the library: scale functions
//! come from a residue expansion of 1/(psi - q) with their own root solve, the
//! refracted and Parisian scale functions from direct quadrature of their
//! defining integrals, with a double-exponential rule rather than the library's
//! adaptive Simpson.

#![allow(dead_code)]

use impulse_core::{LevyModel, ProblemSpec};

/// W^(q) of a spectrally negative process with drift reduced by `delta`.
#[derive(Debug, Clone)]
pub struct OracleW {
    roots: Vec<f64>,
    weights: Vec<f64>,
}

impl OracleW {
    pub fn new(model: &LevyModel, q: f64, delta: f64) -> Self {
        let (roots, dpsi): (Vec<f64>, Box<dyn Fn(f64) -> f64>) = match *model {
            LevyModel::Brownian { mu, sigma } => {
                let mu = mu - delta;
                let s2 = sigma * sigma;
                let d = (mu * mu + 2.0 * q * s2).sqrt();
                (vec![(-mu + d) / s2, (-mu - d) / s2], Box::new(move |r| s2 * r + mu))
            }
            LevyModel::CramerLundberg { mu, eta, alpha } => {
                let mu = mu - delta;
                let bq = mu * alpha - eta - q;
                let d = (bq * bq + 4.0 * mu * q * alpha).sqrt();
                (
                    vec![(-bq + d) / (2.0 * mu), (-bq - d) / (2.0 * mu)],
                    Box::new(move |r| mu - eta * alpha / ((alpha + r) * (alpha + r))),
                )
            }
        };
        let weights = roots.iter().map(|&r| 1.0 / dpsi(r)).collect();
        OracleW { roots, weights }
    }

    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.roots.iter().zip(&self.weights).map(|(r, c)| c * (r * x).exp()).sum()
    }

    pub fn wd(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.roots.iter().zip(&self.weights).map(|(r, c)| c * r * (r * x).exp()).sum()
    }
}

/// theta(x) by quadrature of its defining double integral.
pub struct ThetaOracle {
    pub spec: ProblemSpec,
    x: OracleW,
    y: OracleW,
    star: OracleW,
    tol: f64,
}

impl ThetaOracle {
    pub fn new(spec: &ProblemSpec) -> Self {
        let e = spec.econ;
        ThetaOracle {
            spec: *spec,
            x: OracleW::new(&spec.model, e.q, 0.0),
            y: OracleW::new(&spec.model, e.q, spec.refraction.delta),
            star: OracleW::new(&spec.model, e.q + e.m, 0.0),
            tol: 1e-12,
        }
    }

    /// w^(q)(x; a) from W(x - a) plus the refraction convolution.
    pub fn w_refracted(&self, x: f64, a: f64) -> f64 {
        let (delta, b) = (self.spec.refraction.delta, self.spec.refraction.b);
        let base = self.x.w(x - a);
        if x < b || delta == 0.0 {
            return base;
        }
        base + delta * integrate(|z| self.y.w(x - z) * self.x.wd(z - a), b, x, &[], self.tol)
    }

    pub fn theta(&self, x: f64) -> f64 {
        let e = self.spec.econ;
        let l = e.l;
        let head = self.w_refracted(x, -l);
        if e.m == 0.0 {
            return head;
        }
        head + e.m * integrate(|y| self.w_refracted(x, -l + y) * self.star.w(y), 0.0, l, &[x + l], self.tol)
    }

    pub fn scale_x(&self) -> &OracleW {
        &self.x
    }

    pub fn scale_star(&self) -> &OracleW {
        &self.star
    }
}

/// Double-exponential quadrature over [a, b], split at interior breakpoints.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut edges = vec![a];
    edges.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    edges.push(b);
    edges.windows(2).map(|w| quadrature::double_exponential::integrate(&f, w[0], w[1], tol).integral).sum()
}

/// Richardson-extrapolated central first difference.
pub fn fd_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Richardson-extrapolated central second difference.
pub fn fd_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Midpoints of the scan cells of [lo, hi] across which `f` changes sign.
pub fn sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut out = vec![];
    let mut prev = f(lo);
    for k in 1..=n {
        let x = (lo + k as f64 * step).min(hi);
        let cur = f(x);
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            out.push(x - 0.5 * step);
        }
        prev = cur;
    }
    out
}

/// Points of [lo, hi] at spacing `step`, endpoints included.
pub fn samples(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

pub fn reference_specs() -> [(&'static str, ProblemSpec); 2] {
    [("brownian", ProblemSpec::brownian_reference()), ("cramer_lundberg", ProblemSpec::cramer_lundberg_reference())]
}

/// Relative error of `a` against `b`; absolute where the reference is exactly
/// zero up to `floor`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    rel_err_floor(a, b, f64::MIN_POSITIVE)
}

pub fn rel_err_floor(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
