//! Scale functions W^(q), the Y-scale function, and the refracted w^(q)(x; a).
//!
//! Both supported models have a Laplace exponent for which psi(lambda) = q has
//! exactly two real roots, so every scale function is a two-term exponential sum.

use crate::error::{Error, Result};
use crate::expsum::{ExpSum, LogNum};
use crate::models::{LevyModel, Process, ProblemSpec};
use crate::quad;

/// Which one-sided limit to take at a kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Roots and coefficients of W^(q) for X or Y.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleBasis {
    pub process: Process,
    pub rate: f64,
    pub drift: f64,
    /// rho_1 < 0 <= rho_2 (Brownian) or r_1 < 0 <= r_2 (Cramer-Lundberg).
    pub roots: [f64; 2],
    /// rho = rho_2 - rho_1, or r = r_2 - r_1.
    pub spread: f64,
    /// G_i = (alpha + r_i) / r; Cramer-Lundberg only.
    pub g: Option<[f64; 2]>,
    /// W^(q) on [0, inf).
    pub w: ExpSum,
}

impl ScaleBasis {
    pub fn new(spec: &ProblemSpec, q: f64, process: Process) -> Result<Self> {
        if !(q >= 0.0) {
            return Err(Error::domain("ScaleBasis", format!("q = {q} must be >= 0")));
        }
        let mu = spec.drift(process);
        match spec.model {
            LevyModel::Brownian { sigma, .. } => {
                let s2 = sigma * sigma;
                let d = (mu * mu + 2.0 * q * s2).sqrt();
                if d + mu <= 0.0 {
                    return Err(Error::degenerate("ScaleBasis", "psi(lambda) = q has a double root at 0"));
                }
                let rho1 = -(d + mu) / s2;
                let rho2 = 2.0 * q / (d + mu);
                let spread = 2.0 * d / s2;
                // a_i = 1 / psi'(rho_i) = +-1/d
                let w = ExpSum::new([(LogNum::new(-1.0 / d), rho1), (LogNum::new(1.0 / d), rho2)]);
                Ok(ScaleBasis { process, rate: q, drift: mu, roots: [rho1, rho2], spread, g: None, w })
            }
            LevyModel::CramerLundberg { eta, alpha, .. } => {
                // mu lambda^2 + (mu alpha - eta - q) lambda - q alpha = 0
                let bq = mu * alpha - eta - q;
                let disc = (bq * bq + 4.0 * mu * q * alpha).sqrt();
                if disc == 0.0 {
                    return Err(Error::degenerate("ScaleBasis", "psi(lambda) = q has a double root"));
                }
                let (r1, r2) = if bq >= 0.0 {
                    (-(bq + disc) / (2.0 * mu), 2.0 * q * alpha / (bq + disc))
                } else {
                    let r2 = (disc - bq) / (2.0 * mu);
                    (-q * alpha / (mu * r2), r2)
                };
                let spread = disc / mu;
                let g = [(alpha + r1) / spread, (alpha + r2) / spread];
                let w = ExpSum::new([(LogNum::new(-g[0] / mu), r1), (LogNum::new(g[1] / mu), r2)]);
                Ok(ScaleBasis { process, rate: q, drift: mu, roots: [r1, r2], spread, g: Some(g), w })
            }
        }
    }

    /// W^(q)(x), zero on the negative half-line.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w.eval(x)
        }
    }

    /// W^(q)'(x) for x > 0.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("W_q_deriv", format!("x = {x} must be > 0; use deriv_at_zero")));
        }
        Ok(self.w.deriv(1).eval(x))
    }

    /// W^(q)'(x) with the right limit at 0 and zero on the negative half-line.
    pub fn deriv_or_zero(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w.deriv(1).eval(x)
        }
    }

    /// W^(q)(0+): 0 for Brownian, 1/mu for Cramer-Lundberg.
    pub fn at_zero(&self) -> f64 {
        self.w.eval(0.0)
    }

    /// W^(q)'(0+): 2/sigma^2 for Brownian, (eta + q)/mu^2 for Cramer-Lundberg.
    pub fn deriv_at_zero(&self) -> f64 {
        self.w.deriv(1).eval(0.0)
    }
}

/// The pair of bases (X at rate q, Y at rate q) behind w^(q)(x; a).
#[derive(Debug, Clone, PartialEq)]
pub struct RefractedScale {
    pub spec: ProblemSpec,
    pub x: ScaleBasis,
    pub y: ScaleBasis,
}

impl RefractedScale {
    pub fn new(spec: &ProblemSpec, q: f64) -> Result<Self> {
        Ok(RefractedScale {
            spec: *spec,
            x: ScaleBasis::new(spec, q, Process::X)?,
            y: ScaleBasis::new(spec, q, Process::Y)?,
        })
    }

    /// Closed form of w^(q)(.; a) on [b, inf).
    pub fn upper(&self, a: f64) -> Result<ExpSum> {
        let b = self.spec.refraction.b;
        let delta = self.spec.refraction.delta;
        if a > b {
            return Err(Error::domain("w_refracted", format!("a = {a} above the threshold b = {b}")));
        }
        if delta == 0.0 {
            return Ok(self.x.w.shift(-a));
        }
        let (xr, yr) = (self.x.roots, self.y.roots);
        match self.spec.model {
            LevyModel::Brownian { sigma, .. } => {
                let s4 = sigma.powi(4);
                let mut terms = Vec::with_capacity(2);
                for j in 0..2 {
                    let mut c = LogNum::ZERO;
                    for i in 0..2 {
                        let gap = xr[i] - yr[j];
                        if gap.abs() <= 1e-14 * (xr[i].abs() + yr[j].abs()) {
                            return Err(Error::degenerate("w_refracted", "rho_i equals rho_j^Y"));
                        }
                        let aij = LogNum::new(4.0 * delta * xr[i] / (s4 * self.x.spread * self.y.spread * gap))
                            * LogNum::exp(gap * b);
                        let sign = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
                        c = c + aij * LogNum::exp(-xr[i] * a) * sign;
                    }
                    terms.push((c, yr[j]));
                }
                Ok(ExpSum::new(terms))
            }
            LevyModel::CramerLundberg { mu, .. } => {
                let gy = self.y.g.expect("Cramer-Lundberg basis carries G");
                let mut terms = Vec::with_capacity(2);
                for i in 0..2 {
                    let other = yr[1 - i];
                    let mut phi = LogNum::ZERO;
                    for j in 0..2 {
                        let sign = if j == 0 { 1.0 } else { -1.0 };
                        phi = phi
                            + LogNum::new(sign * (xr[j] - other)) * LogNum::exp((xr[j] - yr[i]) * b - xr[j] * a);
                    }
                    let sign = if i == 0 { 1.0 } else { -1.0 };
                    terms.push((phi * (sign * gy[i] / (mu * self.x.spread)), yr[i]));
                }
                Ok(ExpSum::new(terms))
            }
        }
    }

    /// w^(q)(x; a).
    pub fn eval(&self, x: f64, a: f64) -> Result<f64> {
        let b = self.spec.refraction.b;
        if x < b {
            if a > b {
                return Err(Error::domain("w_refracted", format!("a = {a} above the threshold b = {b}")));
            }
            return Ok(self.x.eval(x - a));
        }
        Ok(self.upper(a)?.eval(x))
    }

    /// w^(q)'(x; a); at x = b in the bounded-variation case a side is required.
    pub fn deriv(&self, x: f64, a: f64, side: Option<Side>) -> Result<f64> {
        let b = self.spec.refraction.b;
        let upper = self.upper(a)?;
        if x == b {
            let left = self.x.deriv_or_zero(b - a);
            let right = upper.deriv(1).eval(b);
            return match side {
                Some(Side::Left) => Ok(left),
                Some(Side::Right) => Ok(right),
                None if !self.spec.model.is_bv() => Ok(left),
                None => Err(Error::SideRequired { op: "w_refracted_deriv", x }),
            };
        }
        if x < b {
            if x - a <= 0.0 {
                return Err(Error::domain("w_refracted_deriv", format!("x = {x} must exceed a = {a}")));
            }
            Ok(self.x.deriv_or_zero(x - a))
        } else {
            Ok(upper.deriv(1).eval(x))
        }
    }
}

/// W^(q)(x) for the given process.
#[allow(non_snake_case)]
pub fn W_q(spec: &ProblemSpec, q: f64, x: f64, process: Process) -> Result<f64> {
    Ok(ScaleBasis::new(spec, q, process)?.eval(x))
}

/// W^(q)'(x), x > 0.
#[allow(non_snake_case)]
pub fn W_q_deriv(spec: &ProblemSpec, q: f64, x: f64, process: Process) -> Result<f64> {
    ScaleBasis::new(spec, q, process)?.deriv(x)
}

pub fn w_refracted(spec: &ProblemSpec, q: f64, x: f64, a: f64) -> Result<f64> {
    RefractedScale::new(spec, q)?.eval(x, a)
}

pub fn w_refracted_deriv(spec: &ProblemSpec, q: f64, x: f64, a: f64, side: Option<Side>) -> Result<f64> {
    RefractedScale::new(spec, q)?.deriv(x, a, side)
}

/// Both integral forms of g^(q+p,q)(x, a).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub form1: f64,
    pub form2: f64,
}

impl GValue {
    pub fn value(&self) -> f64 {
        self.form1
    }

    pub fn rel_gap(&self) -> f64 {
        (self.form1 - self.form2).abs() / self.form1.abs().max(f64::MIN_POSITIVE)
    }
}

/// g^(q+p,q)(x, a) by both integral representations, for -a <= x <= b.
pub fn g_qpq(spec: &ProblemSpec, q: f64, p: f64, x: f64, a: f64) -> Result<GValue> {
    let b = spec.refraction.b;
    if !(a >= 0.0) || x < -a || x > b {
        return Err(Error::domain("g_qpq", format!("need a >= 0 and -a <= x <= b, got x = {x}, a = {a}")));
    }
    let wq = ScaleBasis::new(spec, q, Process::X)?;
    let wqp = ScaleBasis::new(spec, q + p, Process::X)?;
    let tol = quad::QUAD_TOL;
    let i1 = if x > 0.0 {
        quad::integrate(|y| wq.eval(x - y) * wqp.eval(y + a), 0.0, x, &[], tol)
    } else {
        0.0
    };
    let form1 = wqp.eval(x + a) - p * i1;
    let i2 = quad::integrate(|y| wq.eval(x + a - y) * wqp.eval(y), 0.0, a, &[x + a], tol);
    let form2 = wq.eval(x + a) + p * i2;
    Ok(GValue { form1, form2 })
}

/// varpi^(q)(x, b, c) with the threshold b taken from the problem.
pub fn varpi(spec: &ProblemSpec, q: f64, x: f64, c: f64) -> Result<f64> {
    let b = spec.refraction.b;
    if x < b || c < b {
        return Err(Error::domain("varpi", format!("need x, c >= b, got x = {x}, c = {c}")));
    }
    let rs = RefractedScale::new(spec, q)?;
    let wb = rs.x.eval(b);
    let den = rs.y.eval(c - b) * wb;
    if den == 0.0 {
        return Err(Error::domain("varpi", "W(b) or the Y-scale function at c - b vanishes"));
    }
    Ok(rs.y.eval(x - b) * rs.eval(c, 0.0)? / den)
}

/// |p int_0^x W^(q)(x-y) W^(q+p)(y) dy - (W^(q+p)(x) - W^(q)(x))|.
pub fn convolution_identity_residual(spec: &ProblemSpec, q: f64, p: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("convolution_identity_residual", format!("x = {x} must be > 0")));
    }
    let wq = ScaleBasis::new(spec, q, Process::X)?;
    let wqp = ScaleBasis::new(spec, q + p, Process::X)?;
    let lhs = if p == 0.0 {
        0.0
    } else {
        p * quad::integrate(|y| wq.eval(x - y) * wqp.eval(y), 0.0, x, &[], quad::QUAD_TOL)
    };
    Ok((lhs - (wqp.eval(x) - wq.eval(x))).abs())
}
