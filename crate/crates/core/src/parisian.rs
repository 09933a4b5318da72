//! The Parisian refracted scale function theta(x) = vartheta^(q+m,q)(x, -l).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expsum::{ExpSum, LogNum};
use crate::models::{LevyModel, Process, ProblemSpec};
use crate::quad;
use crate::scale::{RefractedScale, ScaleBasis, Side};

/// Which closed-form piece covers a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Segment {
    /// [-l, 0)
    Lower = 0,
    /// [0, b)
    Middle = 1,
    /// [b, inf)
    Upper = 2,
}

/// Model-specific constants of the closed forms, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RefractedCoefficients {
    Brownian {
        /// A_ij for the Y-segment.
        a: [[f64; 2]; 2],
        /// A*_ij for the middle segment.
        a_star: [[f64; 2]; 2],
        /// Q_i(l).
        q: [f64; 2],
    },
    CramerLundberg {
        /// phi_i(l) of w^(q)(x; -l).
        phi: [f64; 2],
        phi_star: [f64; 2],
        phi_y: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBasis {
    pub spec: ProblemSpec,
    pub refracted: RefractedScale,
    /// X at rate q + m.
    pub star: ScaleBasis,
    pub coefficients: RefractedCoefficients,
    pieces: [ExpSum; 3],
}

fn alt(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl ThetaBasis {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let spec = spec.validated()?;
        let q = spec.econ.q;
        let m = spec.econ.m;
        let l = spec.econ.l;
        let b = spec.refraction.b;
        let delta = spec.refraction.delta;
        let refracted = RefractedScale::new(&spec, q)?;
        let star = ScaleBasis::new(&spec, q + m, Process::X)?;
        let (x, y) = (&refracted.x, &refracted.y);
        let (r, s, ry) = (x.roots, star.roots, y.roots);

        let lower = star.w.shift(l);
        let (middle, upper, coefficients) = match spec.model {
            LevyModel::Brownian { sigma, .. } => {
                let s4 = sigma.powi(4);
                let mut a_star = [[0.0; 2]; 2];
                let mut a = [[0.0; 2]; 2];
                let mut qv = [LogNum::ZERO; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        a_star[i][j] = 4.0 * m / (s4 * x.spread * star.spread * (s[i] - r[j]));
                        let gap = r[i] - ry[j];
                        a[i][j] = 4.0 * delta * r[i] / (s4 * x.spread * y.spread * gap);
                    }
                    qv[i] = LogNum::new((r[i] - s[0]) / star.spread) * LogNum::exp(s[1] * l)
                        - LogNum::new((r[i] - s[1]) / star.spread) * LogNum::exp(s[0] * l);
                }
                // sum_i (-1)^i e^{rho*_i l} sum_j (-1)^j A*_ij e^{rho_j x}
                let middle = ExpSum::new((0..2).map(|j| {
                    let c = (0..2).fold(LogNum::ZERO, |acc, i| {
                        acc + LogNum::exp(s[i] * l) * (alt(i + j) * a_star[i][j])
                    });
                    (c, r[j])
                }));
                // sum_i (-1)^i Q_i sum_j (-1)^{j+1} A_ij e^{rho^Y_j x}, with e^{(rho_i - rho^Y_j) b}
                // folded into the log coefficient
                let upper = ExpSum::new((0..2).map(|j| {
                    let c = (0..2).fold(LogNum::ZERO, |acc, i| {
                        acc + qv[i] * LogNum::exp((r[i] - ry[j]) * b) * (-alt(i + j) * a[i][j])
                    });
                    (c, ry[j])
                }));
                let mut a_full = a;
                for i in 0..2 {
                    for j in 0..2 {
                        a_full[i][j] *= ((r[i] - ry[j]) * b).exp();
                    }
                }
                let coef = RefractedCoefficients::Brownian {
                    a: a_full,
                    a_star,
                    q: [qv[0].value(), qv[1].value()],
                };
                (middle, upper, coef)
            }
            LevyModel::CramerLundberg { mu, .. } => {
                let g = x.g.expect("G coefficients");
                let gy = y.g.expect("G coefficients");
                let mut phi = [LogNum::ZERO; 2];
                let mut phi_star = [LogNum::ZERO; 2];
                let mut phi_y = [LogNum::ZERO; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        phi[i] = phi[i]
                            + LogNum::new(alt(j) * (r[j] - ry[1 - i]))
                                * LogNum::exp((r[j] - ry[i]) * b + r[j] * l);
                        phi_star[i] = phi_star[i] + LogNum::new(alt(j) * (s[j] - r[1 - i])) * LogNum::exp(s[j] * l);
                        let inner = (0..2).fold(LogNum::ZERO, |acc, k| {
                            acc + LogNum::new(alt(k) * (r[k] - ry[1 - i]) * (s[j] - r[1 - k]))
                                * LogNum::exp((r[k] - ry[i]) * b)
                        });
                        phi_y[i] = phi_y[i] + LogNum::exp(s[j] * l) * inner * (-alt(j));
                    }
                }
                let middle = ExpSum::new((0..2).map(|i| (phi_star[i] * (alt(i) * g[i] / (mu * star.spread)), r[i])));
                let upper = ExpSum::new(
                    (0..2).map(|i| (phi_y[i] * (alt(i) * gy[i] / (mu * x.spread * star.spread)), ry[i])),
                );
                let coef = RefractedCoefficients::CramerLundberg {
                    phi: [phi[0].value(), phi[1].value()],
                    phi_star: [phi_star[0].value(), phi_star[1].value()],
                    phi_y: [phi_y[0].value(), phi_y[1].value()],
                };
                (middle, upper, coef)
            }
        };
        // Without a Parisian delay the middle piece reduces to W(x + l); the
        // Brownian formula carries an explicit factor m and would vanish.
        let middle = if m == 0.0 { x.w.shift(l) } else { middle };
        // Without refraction the upper piece continues the middle one; the
        // Brownian A_ij carry an explicit factor delta.
        let upper = if delta == 0.0 {
            middle.clone()
        } else if m == 0.0 {
            refracted.upper(-l)?
        } else {
            upper
        };
        Ok(ThetaBasis { spec, refracted, star, coefficients, pieces: [lower, middle, upper] })
    }

    pub fn l(&self) -> f64 {
        self.spec.econ.l
    }

    pub fn b(&self) -> f64 {
        self.spec.refraction.b
    }

    pub fn is_bv(&self) -> bool {
        self.spec.model.is_bv()
    }

    /// The closed-form exponential sum used on a segment.
    pub fn piece(&self, seg: Segment) -> &ExpSum {
        &self.pieces[seg as usize]
    }

    pub fn segment(&self, x: f64) -> Segment {
        if x < 0.0 {
            Segment::Lower
        } else if x < self.b() {
            Segment::Middle
        } else {
            Segment::Upper
        }
    }

    fn segment_left(&self, x: f64) -> Segment {
        if x <= 0.0 {
            Segment::Lower
        } else if x <= self.b() {
            Segment::Middle
        } else {
            Segment::Upper
        }
    }

    fn check_domain(&self, op: &'static str, x: f64) -> Result<()> {
        if x < -self.l() || x.is_nan() {
            return Err(Error::domain(op, format!("x = {x} below the barrier -l = {}", -self.l())));
        }
        Ok(())
    }

    /// Kink points of theta' (0 and b), deduplicated.
    pub fn kinks(&self) -> Vec<f64> {
        if self.b() == 0.0 {
            vec![0.0]
        } else {
            vec![0.0, self.b()]
        }
    }

    pub fn theta(&self, x: f64) -> Result<f64> {
        Ok(self.theta_log(x)?.value())
    }

    /// theta(x) as sign and log-magnitude, for ratios of very large values.
    pub fn theta_log(&self, x: f64) -> Result<LogNum> {
        self.check_domain("theta", x)?;
        // W^(q+m)(x + l) directly, so theta(-l) is exactly W^(q+m)(0)
        match self.segment(x) {
            Segment::Lower => Ok(self.star.w.eval_log(x + self.l())),
            seg => Ok(self.piece(seg).eval_log(x)),
        }
    }

    /// theta'(x); a side must be given at 0 and b in the bounded-variation case.
    pub fn theta_deriv(&self, x: f64) -> Result<f64> {
        self.check_domain("theta_deriv", x)?;
        if self.kinks().contains(&x) {
            if self.is_bv() {
                return Err(Error::SideRequired { op: "theta_deriv", x });
            }
            return self.theta_deriv_side(x, Side::Right);
        }
        Ok(self.piece(self.segment(x)).deriv(1).eval(x))
    }

    pub fn theta_deriv_side(&self, x: f64, side: Side) -> Result<f64> {
        self.check_domain("theta_deriv", x)?;
        let seg = match side {
            Side::Left => self.segment_left(x),
            Side::Right => self.segment(x),
        };
        Ok(self.piece(seg).deriv(1).eval(x))
    }

    /// theta''(x) on segment interiors.
    pub fn theta_second(&self, x: f64) -> Result<f64> {
        self.check_domain("theta_second", x)?;
        if x == -self.l() || self.kinks().contains(&x) {
            return Err(Error::domain("theta_second", format!("x = {x} is a segment boundary")));
        }
        Ok(self.piece(self.segment(x)).deriv(2).eval(x))
    }

    /// Breakpoints of the monotonicity pattern of theta'.
    pub fn breakpoints(&self) -> Result<Breakpoints> {
        let e = self.spec.econ;
        if !(e.q > 0.0 && e.m > 0.0) {
            return Err(Error::degenerate("breakpoints", "the monotonicity structure needs q > 0 and m > 0"));
        }
        let l = e.l;
        let b = self.b();
        let lower2 = self.piece(Segment::Lower).deriv(2);
        let middle2 = self.piece(Segment::Middle).deriv(2);
        let upper2 = self.piece(Segment::Upper).deriv(2);
        let zeta1 = crossing(&lower2, -l, 0.0);
        let zeta2 = crossing(&middle2, 0.0, b);
        let coef = |f: &ExpSum, k: usize| f.terms.get(k).map_or(0.0, |t| t.coef.value());
        // Brownian: theta'' = K_2 e^{rho_2 x} - K_1 e^{rho_1 x} on each upper segment.
        // Cramer-Lundberg: the leading coefficient carries the sign of phi^Y_1.
        let (middle_coefficients, upper_coefficients) = match &self.coefficients {
            RefractedCoefficients::Brownian { .. } => (
                [-coef(&middle2, 0), coef(&middle2, 1)],
                [-coef(&upper2, 0), coef(&upper2, 1)],
            ),
            RefractedCoefficients::CramerLundberg { phi_star, phi_y, .. } => (*phi_star, *phi_y),
        };
        let tail_branch = upper2.terms.first().is_some_and(|t| t.coef.sign < 0.0);
        let zeta3 = if tail_branch { Some(crossing(&upper2, b, f64::INFINITY)) } else { None };
        let eps1 = zeta1.max(-l).min(0.0);
        let eps2 = match zeta3 {
            Some(z3) => zeta2.max(0.0).min(z3.max(b)),
            None => zeta2.max(0.0).min(b),
        };
        let zeta_order_violated = zeta3.is_some_and(|z3| z3 > zeta2);
        Ok(Breakpoints {
            eps1,
            eps2,
            zeta1,
            zeta2,
            zeta3,
            tail_branch,
            middle_coefficients,
            upper_coefficients,
            zeta_order_violated,
        })
    }

    /// Maximal intervals of [0, hi] on which theta' is monotone.
    ///
    /// Pieces are split at zeros of theta'' and at b; adjacent pieces with the
    /// same direction are merged when theta' is continuous at the junction.
    pub fn monotone_pieces(&self, hi: f64) -> Vec<MonotonePiece> {
        let b = self.b();
        let mut cuts = vec![0.0];
        let mut segs = vec![];
        if b > 0.0 {
            segs.push((Segment::Middle, 0.0, b.min(hi)));
        }
        if hi > b {
            segs.push((Segment::Upper, b, hi));
        }
        let mut raw: Vec<MonotonePiece> = vec![];
        for (seg, lo, up) in segs {
            if up <= lo {
                continue;
            }
            let f2 = self.piece(seg).deriv(2);
            let mut pts = vec![lo];
            if let Some(z) = f2.two_term_zero() {
                if z > lo && z < up {
                    pts.push(z);
                }
            }
            pts.push(up);
            for w in pts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                raw.push(MonotonePiece { lo: w[0], hi: w[1], increasing: f2.eval(mid) > 0.0 });
            }
            cuts.push(up);
        }
        let mut out: Vec<MonotonePiece> = vec![];
        for p in raw {
            if let Some(last) = out.last_mut() {
                let kink = self.is_bv() && last.hi == b;
                if last.increasing == p.increasing && !kink {
                    last.hi = p.hi;
                    continue;
                }
            }
            out.push(p);
        }
        out
    }
}

/// Zero of a two-term second-derivative sum, as a sign-change location.
///
/// With no sign change the value is -inf when the sum is positive (theta'
/// increasing throughout) and +inf when negative. Falls back to bisection if
/// the log-formula leaves a residual above 1e-6 of the term scale.
fn crossing(f: &ExpSum, lo: f64, hi: f64) -> f64 {
    match f.two_term_zero() {
        Some(z) => {
            let scale: f64 = f.terms.iter().map(|t| (t.coef.ln + t.rate * z).exp()).sum();
            if f.eval(z).abs() <= 1e-6 * scale {
                return z;
            }
            let (a, c) = if hi.is_finite() { (lo.min(z - 1.0), hi.max(z + 1.0)) } else { (z - 1.0, z + 1.0) };
            quad::bisect(|x| f.eval(x), a, c, 1e-14).unwrap_or(z)
        }
        None => {
            let top = f.terms.last().map_or(0.0, |t| t.coef.sign);
            if top > 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakpoints {
    pub eps1: f64,
    pub eps2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: Option<f64>,
    /// True when theta'' is negative just above b (K_1 > 0, or M_1 < 0).
    pub tail_branch: bool,
    /// (K*_1, K*_2) for Brownian, (phi*_1, phi*_2) for Cramer-Lundberg.
    pub middle_coefficients: [f64; 2],
    /// (K_1, K_2) for Brownian, (M_1, M_2) = (phi^Y_1, phi^Y_2) for Cramer-Lundberg.
    pub upper_coefficients: [f64; 2],
    /// Set when zeta3 > zeta2, contrary to the ordering the formulas assume.
    pub zeta_order_violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonePiece {
    pub lo: f64,
    pub hi: f64,
    pub increasing: bool,
}
