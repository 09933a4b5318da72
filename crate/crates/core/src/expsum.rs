//! Sums of exponentials with log-magnitude coefficients.
//!
//! Every closed form in this crate is a short sum c_k e^{r_k x}. Coefficients
//! often carry factors like e^{r l} or e^{r b} that overflow on their own even
//! when the final value is moderate, so they are kept as sign plus log-magnitude.

use std::ops::{Add, Mul, Neg, Sub};

/// A real number stored as `sign * exp(ln)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNum {
    pub sign: f64,
    pub ln: f64,
}

impl LogNum {
    pub const ZERO: LogNum = LogNum { sign: 0.0, ln: f64::NEG_INFINITY };

    pub fn new(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogNum { sign: v.signum(), ln: v.abs().ln() }
        }
    }

    /// e^{a}.
    pub fn exp(a: f64) -> Self {
        LogNum { sign: 1.0, ln: a }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0.0
    }
}

impl Mul for LogNum {
    type Output = LogNum;
    fn mul(self, o: LogNum) -> LogNum {
        if self.is_zero() || o.is_zero() {
            return LogNum::ZERO;
        }
        LogNum { sign: self.sign * o.sign, ln: self.ln + o.ln }
    }
}

impl Mul<f64> for LogNum {
    type Output = LogNum;
    fn mul(self, o: f64) -> LogNum {
        self * LogNum::new(o)
    }
}

impl Neg for LogNum {
    type Output = LogNum;
    fn neg(self) -> LogNum {
        LogNum { sign: -self.sign, ln: self.ln }
    }
}

impl Add for LogNum {
    type Output = LogNum;
    fn add(self, o: LogNum) -> LogNum {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        let t = big.sign + small.sign * (small.ln - big.ln).exp();
        if t == 0.0 {
            return LogNum::ZERO;
        }
        LogNum { sign: t.signum(), ln: big.ln + t.abs().ln() }
    }
}

impl Sub for LogNum {
    type Output = LogNum;
    fn sub(self, o: LogNum) -> LogNum {
        self + (-o)
    }
}

/// Signed log-sum-exp over several terms.
pub fn log_sum(terms: impl IntoIterator<Item = LogNum>) -> LogNum {
    let terms: Vec<LogNum> = terms.into_iter().filter(|t| !t.is_zero()).collect();
    let Some(top) = terms.iter().map(|t| t.ln).reduce(f64::max) else {
        return LogNum::ZERO;
    };
    let s: f64 = terms.iter().map(|t| t.sign * (t.ln - top).exp()).sum();
    if s == 0.0 {
        LogNum::ZERO
    } else {
        LogNum { sign: s.signum(), ln: top + s.abs().ln() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: LogNum,
    pub rate: f64,
}

/// x -> sum_k coef_k e^{rate_k x}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpSum {
    pub terms: Vec<Term>,
}

impl ExpSum {
    pub fn new(terms: impl IntoIterator<Item = (LogNum, f64)>) -> Self {
        ExpSum {
            terms: terms
                .into_iter()
                .filter(|(c, _)| !c.is_zero())
                .map(|(coef, rate)| Term { coef, rate })
                .collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_log(x).value()
    }

    pub fn eval_log(&self, x: f64) -> LogNum {
        log_sum(self.terms.iter().map(|t| LogNum { sign: t.coef.sign, ln: t.coef.ln + t.rate * x }))
    }

    /// Termwise k-th derivative.
    pub fn deriv(&self, k: u32) -> ExpSum {
        ExpSum::new(self.terms.iter().map(|t| (t.coef * LogNum::new(t.rate.powi(k as i32)), t.rate)))
    }

    /// x -> self(x + h).
    pub fn shift(&self, h: f64) -> ExpSum {
        ExpSum::new(self.terms.iter().map(|t| (t.coef * LogNum::exp(t.rate * h), t.rate)))
    }

    pub fn scale(&self, c: LogNum) -> ExpSum {
        ExpSum::new(self.terms.iter().map(|t| (t.coef * c, t.rate)))
    }

    /// Zero of a two-term sum A e^{ux} + B e^{vx}, if one exists.
    ///
    /// Returns `Some(x)` for the unique crossing, `None` when both
    /// coefficients share a sign (or the sum has fewer than two terms).
    pub fn two_term_zero(&self) -> Option<f64> {
        if self.terms.len() != 2 {
            return None;
        }
        let (a, b) = (self.terms[0], self.terms[1]);
        if a.coef.sign == b.coef.sign || a.rate == b.rate {
            return None;
        }
        // A e^{ux} = -B e^{vx}  =>  x = (ln|A| - ln|B|) / (v - u)
        Some((a.coef.ln - b.coef.ln) / (b.rate - a.rate))
    }
}
