//! Risk-model parameterization, validation and Laplace exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The uncontrolled surplus process X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LevyModel {
    /// X_t = x + mu t + sigma B_t.
    Brownian { mu: f64, sigma: f64 },
    /// X_t = x + mu t - S_t with Poisson(eta) claims of Exp(alpha) size.
    CramerLundberg { mu: f64, eta: f64, alpha: f64 },
}

impl LevyModel {
    pub fn mu(&self) -> f64 {
        match *self {
            LevyModel::Brownian { mu, .. } | LevyModel::CramerLundberg { mu, .. } => mu,
        }
    }

    /// Paths of bounded variation (the compound Poisson case).
    pub fn is_bv(&self) -> bool {
        matches!(self, LevyModel::CramerLundberg { .. })
    }

    /// psi'(0+), the mean drift of X.
    pub fn mean_drift(&self) -> f64 {
        match *self {
            LevyModel::Brownian { mu, .. } => mu,
            LevyModel::CramerLundberg { mu, eta, alpha } => mu - eta / alpha,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LevyModel::Brownian { .. } => "brownian",
            LevyModel::CramerLundberg { .. } => "cramer_lundberg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefractionSpec {
    pub delta: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconSpec {
    pub q: f64,
    pub m: f64,
    pub l: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub model: LevyModel,
    pub refraction: RefractionSpec,
    pub econ: EconSpec,
}

/// Which process an exponent or scale function refers to: X, or Y = X - delta t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    X,
    Y,
}

/// A violated parameter rule, named so callers can report it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, rule: &'static str, message: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(Violation { rule, message: message() });
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.rule, v.message)?;
        }
        Ok(())
    }
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Collects every violated invariant of the problem.
pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    match spec.model {
        LevyModel::Brownian { mu, sigma } => {
            r.check(finite_pos(mu), "brownian_drift_positive", || format!("mu = {mu} must be > 0"));
            r.check(finite_pos(sigma), "brownian_volatility_positive", || {
                format!("sigma = {sigma} must be > 0")
            });
        }
        LevyModel::CramerLundberg { mu, eta, alpha } => {
            r.check(finite_pos(mu), "premium_rate_positive", || format!("mu = {mu} must be > 0"));
            r.check(finite_pos(eta), "claim_rate_positive", || format!("eta = {eta} must be > 0"));
            r.check(finite_pos(alpha), "claim_size_parameter_positive", || {
                format!("alpha = {alpha} must be > 0")
            });
        }
    }
    let RefractionSpec { delta, b } = spec.refraction;
    r.check(finite_nonneg(delta), "refraction_rate_nonnegative", || {
        format!("delta = {delta} must be >= 0")
    });
    r.check(finite_nonneg(b), "threshold_nonnegative", || format!("b = {b} must be >= 0"));
    let mu = spec.model.mu();
    if spec.model.is_bv() {
        r.check(delta < mu, "drift_retention", || {
            format!("bounded-variation model needs delta < mu, got delta = {delta}, mu = {mu}")
        });
    }
    let net = spec.model.mean_drift() - delta;
    r.check(net >= 0.0, "net_profit", || {
        format!("psi'(0+) - delta = {net} must be >= 0")
    });
    let EconSpec { q, m, l, beta } = spec.econ;
    r.check(finite_nonneg(q), "discount_rate_nonnegative", || format!("q = {q} must be >= 0"));
    r.check(finite_nonneg(m), "parisian_rate_nonnegative", || format!("m = {m} must be >= 0"));
    r.check(finite_pos(l), "barrier_depth_positive", || format!("l = {l} must be > 0"));
    r.check(finite_pos(beta), "transaction_cost_positive", || format!("beta = {beta} must be > 0"));
    r
}

impl ProblemSpec {
    pub fn validated(self) -> Result<Self> {
        let report = validate(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::Invalid(report.to_string()))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed problem JSON: {e}")))
    }

    /// Drift of the given process below (X) or above (Y) the threshold.
    pub fn drift(&self, process: Process) -> f64 {
        match process {
            Process::X => self.model.mu(),
            Process::Y => self.model.mu() - self.refraction.delta,
        }
    }

    /// Brownian parameter set used throughout the examples.
    pub fn brownian_reference() -> Self {
        ProblemSpec {
            model: LevyModel::Brownian { mu: 0.5, sigma: 0.75 },
            refraction: RefractionSpec { delta: 0.03, b: 3.0 },
            econ: EconSpec { q: 0.05, m: 0.05, l: 6.0, beta: 1.0 },
        }
    }

    /// Cramer-Lundberg parameter set used throughout the examples.
    pub fn cramer_lundberg_reference() -> Self {
        ProblemSpec {
            model: LevyModel::CramerLundberg { mu: 3.0, eta: 2.0, alpha: 1.0 },
            refraction: RefractionSpec { delta: 0.15, b: 6.0 },
            econ: EconSpec { q: 0.05, m: 0.5, l: 6.0, beta: 0.1 },
        }
    }
}

/// psi(lambda) for X, or psi(lambda) - delta lambda for Y.
pub fn laplace_exponent(spec: &ProblemSpec, lambda: f64, process: Process) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain("laplace_exponent", format!("lambda = {lambda} must be >= 0")));
    }
    let psi = match spec.model {
        LevyModel::Brownian { mu, sigma } => mu * lambda + 0.5 * sigma * sigma * lambda * lambda,
        LevyModel::CramerLundberg { mu, eta, alpha } => mu * lambda + eta * (alpha / (lambda + alpha) - 1.0),
    };
    Ok(match process {
        Process::X => psi,
        Process::Y => psi - spec.refraction.delta * lambda,
    })
}

/// Largest nonnegative root of psi(lambda) = q (X) or psi(lambda) - delta lambda = q (Y).
pub fn phi_inverse(spec: &ProblemSpec, q: f64, process: Process) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::domain("phi_inverse", format!("q = {q} must be >= 0")));
    }
    let f = |lam: f64| laplace_exponent(spec, lam, process).map(|v| v - q);
    // Under net profit psi is nondecreasing on [0, inf), so the root is the
    // right end of the zero set; bisection keeps the invariant f(lo) <= 0 < f(hi).
    let mut hi = 1.0;
    let mut n = 0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::nonconvergence("phi_inverse", "could not bracket the root"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if q == 0.0 && lo < 1e-13 { 0.0 } else { 0.5 * (lo + hi) })
}
