//! Exit transforms, impulse-policy values, the H-surface and HJB diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LevyModel;
use crate::parisian::ThetaBasis;
use crate::quad;
use crate::scale::Side;

/// Pay down to `c1` whenever the surplus reaches `c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub c1: f64,
    pub c2: f64,
}

impl Policy {
    pub fn new(c1: f64, c2: f64, beta: f64) -> Result<Self> {
        if !(c1 >= 0.0) || !(c2 > c1 + beta) || !c2.is_finite() {
            return Err(Error::domain(
                "Policy",
                format!("need c1 >= 0 and c2 > c1 + beta, got c1 = {c1}, c2 = {c2}, beta = {beta}"),
            ));
        }
        Ok(Policy { c1, c2 })
    }

    /// Net amount paid at each dividend event.
    pub fn payout(&self, beta: f64) -> f64 {
        self.c2 - self.c1 - beta
    }
}

/// E_x[e^{-q k_c^+}; k_c^+ < T] = theta(x) / theta(c).
pub fn exit_laplace(basis: &ThetaBasis, x: f64, c: f64) -> Result<f64> {
    if x < -basis.l() || x > c {
        return Err(Error::domain("exit_laplace", format!("need -l <= x <= c, got x = {x}, c = {c}")));
    }
    if x == c {
        return Ok(1.0);
    }
    let num = basis.theta_log(x)?;
    if num.is_zero() {
        return Ok(0.0);
    }
    let den = basis.theta_log(c)?;
    Ok((num.ln - den.ln).exp())
}

/// (theta(c2) - theta(c1)) / (c2 - c1 - beta).
#[allow(non_snake_case)]
pub fn H_surface(basis: &ThetaBasis, c1: f64, c2: f64) -> Result<f64> {
    let beta = basis.spec.econ.beta;
    if !(c1 >= 0.0) || !(c2 > c1 + beta) {
        return Err(Error::domain("H_surface", format!("(c1, c2) = ({c1}, {c2}) outside c1 >= 0, c2 > c1 + beta")));
    }
    Ok((basis.theta(c2)? - basis.theta(c1)?) / (c2 - c1 - beta))
}

/// Anything the HJB checker can apply the generator to.
pub trait ValueFunction {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    /// Points where d1 or d2 may jump.
    fn kinks(&self) -> Vec<f64>;
}

/// Value of the (c1, c2) impulse policy: k theta(x) up to c2, affine above.
#[derive(Debug, Clone)]
pub struct ValueCurve<'a> {
    pub basis: &'a ThetaBasis,
    pub policy: Policy,
    /// (c2 - c1 - beta) / (theta(c2) - theta(c1)).
    pub k: f64,
    /// V(c2).
    pub top: f64,
}

impl<'a> ValueCurve<'a> {
    pub fn new(basis: &'a ThetaBasis, policy: Policy) -> Result<Self> {
        let h = H_surface(basis, policy.c1, policy.c2)?;
        let k = 1.0 / h;
        Ok(ValueCurve { basis, policy, k, top: k * basis.theta(policy.c2)? })
    }

    /// The optimal value curve: theta(x) / theta'(c2*) below c2*.
    pub fn optimal(basis: &'a ThetaBasis, cstar: Policy) -> Result<Self> {
        let h = H_surface(basis, cstar.c1, cstar.c2)?;
        let d = basis.theta_deriv_side(cstar.c2, Side::Left)?;
        let residual = (d - h).abs() / h;
        if residual > 1e-4 {
            return Err(Error::domain(
                "value_optimal",
                format!("theta'(c2) = {d} differs from H = {h} (relative {residual:.3e}); not an optimum"),
            ));
        }
        let k = 1.0 / d;
        Ok(ValueCurve { basis, policy: cstar, k, top: k * basis.theta(cstar.c2)? })
    }

    /// (x, V(x)) on a grid.
    pub fn tabulate(&self, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter().map(|&x| (x, self.value(x))).collect()
    }
}

impl ValueFunction for ValueCurve<'_> {
    fn value(&self, x: f64) -> f64 {
        if x < -self.basis.l() {
            0.0
        } else if x <= self.policy.c2 {
            self.k * self.basis.theta(x).unwrap_or(0.0)
        } else {
            x - self.policy.c2 + self.top
        }
    }

    fn d1(&self, x: f64) -> f64 {
        if x < -self.basis.l() {
            0.0
        } else if x <= self.policy.c2 {
            self.k * self.basis.theta_deriv_side(x, Side::Right).unwrap_or(f64::NAN)
        } else {
            1.0
        }
    }

    fn d2(&self, x: f64) -> f64 {
        if x < -self.basis.l() || x > self.policy.c2 {
            0.0
        } else {
            let seg = self.basis.segment(x);
            self.k * self.basis.piece(seg).deriv(2).eval(x)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = self.basis.kinks();
        k.push(self.policy.c2);
        k
    }
}

pub fn value_policy(basis: &ThetaBasis, policy: Policy, x: f64) -> Result<f64> {
    if x < -basis.l() {
        return Err(Error::domain("value_policy", format!("x = {x} below the barrier")));
    }
    Ok(ValueCurve::new(basis, policy)?.value(x))
}

pub fn value_optimal(basis: &ThetaBasis, cstar: Policy, x: f64) -> Result<f64> {
    if x < -basis.l() {
        return Err(Error::domain("value_optimal", format!("x = {x} below the barrier")));
    }
    Ok(ValueCurve::optimal(basis, cstar)?.value(x))
}

/// Radius of the excluded neighbourhoods around kinks.
pub const KINK_RADIUS: f64 = 1e-3;

/// (A - q - m 1{x<0}) V(x).
pub fn hjb_residual(basis: &ThetaBasis, v: &impl ValueFunction, x: f64) -> Result<f64> {
    let l = basis.l();
    let kinks = v.kinks();
    if x <= -l || kinks.iter().any(|&k| (x - k).abs() < KINK_RADIUS) {
        return Err(Error::domain("hjb_residual", format!("x = {x} is at the barrier or near a kink")));
    }
    let spec = &basis.spec;
    let (q, m) = (spec.econ.q, spec.econ.m);
    let b = spec.refraction.b;
    let drift = spec.model.mu() - if x > b { spec.refraction.delta } else { 0.0 };
    let kill = q + if x < 0.0 { m } else { 0.0 };
    let vx = v.value(x);
    let gen = match spec.model {
        LevyModel::Brownian { sigma, .. } => drift * v.d1(x) + 0.5 * sigma * sigma * v.d2(x),
        LevyModel::CramerLundberg { eta, alpha, .. } => {
            // Jumps past the barrier land where V = 0, so the integral stops at z = x + l.
            let breaks: Vec<f64> = kinks.iter().map(|&k| x - k).collect();
            let jump = quad::integrate(
                |z| v.value(x - z) * alpha * (-alpha * z).exp(),
                0.0,
                x + l,
                &breaks,
                quad::QUAD_TOL,
            );
            drift * v.d1(x) + eta * (jump - vx)
        }
    };
    Ok(gen - kill * vx)
}

/// Outcome of the two-sided bound check on V(x) - V(y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    /// x - y - beta <= V(x) - V(y); `None` when not applicable.
    pub lower_holds: Option<bool>,
    /// V(x) - V(y) <= (1 - theta(y)/theta(x)) V(x).
    pub upper_holds: bool,
    pub lower_slack: f64,
    pub upper_slack: f64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.upper_holds && self.lower_holds.unwrap_or(true)
    }
}

pub const BOUND_SLACK: f64 = 1e-9;

pub fn bound_check(basis: &ThetaBasis, v: &impl ValueFunction, x: f64, y: f64) -> Result<BoundReport> {
    if !(x >= y) || y < -basis.l() {
        return Err(Error::domain("bound_check", format!("need x >= y >= -l, got x = {x}, y = {y}")));
    }
    let beta = basis.spec.econ.beta;
    let (vx, vy) = (v.value(x), v.value(y));
    let diff = vx - vy;
    let (lower_holds, lower_slack) = if y >= 0.0 && x - y > beta {
        let s = diff - (x - y - beta);
        (Some(s >= -BOUND_SLACK), s)
    } else {
        (None, f64::INFINITY)
    };
    let ratio = exit_laplace(basis, y, x)?;
    let upper_slack = (1.0 - ratio) * vx - diff;
    Ok(BoundReport { lower_holds, upper_holds: upper_slack >= -BOUND_SLACK, lower_slack, upper_slack })
}
