//! Monte Carlo for the controlled refracted process with Parisian clocks.
//!
//! Cramer-Lundberg paths are simulated exactly: between claims the surplus is
//! piecewise linear, so every level crossing is solved in closed form. Brownian
//! paths use an Euler scheme and detect crossings on the time grid.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::{LevyModel, ProblemSpec};
use crate::quad::pairwise_sum;
use crate::rng::PathStreams;
use crate::valuation::Policy;

/// How Parisian ruin enters the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Ruin when a negative excursion outlives a fresh Exp(m) clock.
    Clock,
    /// No Parisian ruin; payoffs weighted by exp(-m * time spent below 0).
    Killing,
}

/// How the discount e^{-qt} enters the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    /// Stop the path at an independent Exp(q) time; payoffs are undiscounted.
    Clock,
    /// Weight payoffs by e^{-qt} and run to the horizon cap.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Euler step for the Brownian model.
    pub dt: f64,
    /// Horizon cap; `None` means 50/q.
    pub t_max: Option<f64>,
    pub estimator: Estimator,
    pub discount: DiscountMode,
    pub exec: Execution,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        SimConfig {
            n_paths,
            seed,
            dt: 2.5e-3,
            t_max: None,
            estimator: Estimator::Clock,
            discount: DiscountMode::Clock,
            exec: Execution::default(),
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_discount(mut self, discount: DiscountMode) -> Self {
        self.discount = discount;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn horizon_cap(&self, q: f64) -> f64 {
        self.t_max.unwrap_or(if q > 0.0 { 50.0 / q } else { f64::INFINITY })
    }

    fn check(&self, q: f64) -> Result<()> {
        let cap = self.horizon_cap(q);
        if self.n_paths == 0 || !(self.dt > 0.0) || !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::domain(
                "SimConfig",
                format!("need n_paths >= 1, dt > 0 and a finite t_max > 0 (t_max = {cap})"),
            ));
        }
        Ok(())
    }
}

/// What a simulated path pays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// Discounted dividends net of costs under the policy.
    Dividends(Policy),
    /// e^{-q k_c^+} on reaching `level` before ruin.
    Exit { level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Excursion below 0 outlived its clock.
    ParisianRuin,
    /// Fell below -l.
    BarrierRuin,
    /// Reached the exit level.
    Target,
    /// Stopped by the discount clock.
    Discounted,
    /// Hit the horizon cap.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub payoff: f64,
    pub end_time: f64,
    pub termination: Termination,
    /// exp(-m * time below 0) at the end of the path.
    pub killing_weight: f64,
    pub dividends: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_effective: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub truncation_fraction: f64,
}

impl SimEstimate {
    pub fn from_records(records: &[PathRecord], seed: u64) -> Self {
        let n = records.len();
        let pay: Vec<f64> = records.iter().map(|r| r.payoff).collect();
        let mean = pairwise_sum(&pay) / n as f64;
        let sq: Vec<f64> = pay.iter().map(|p| (p - mean) * (p - mean)).collect();
        let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        let truncated = records.iter().filter(|r| r.termination == Termination::Truncated).count();
        SimEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_effective: n,
            n_paths: n,
            seed,
            truncation_fraction: truncated as f64 / n as f64,
        }
    }

    pub fn z_score(&self, analytic: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == analytic {
                0.0
            } else {
                f64::INFINITY * (self.mean - analytic).signum()
            }
        } else {
            (self.mean - analytic) / self.stderr
        }
    }
}

/// Running state shared by both path engines.
struct Path<'a> {
    spec: &'a ProblemSpec,
    functional: Functional,
    estimator: Estimator,
    weighted: bool,
    t: f64,
    u: f64,
    below_time: f64,
    deadline: f64,
    payoff: f64,
    dividends: u32,
}

enum Step {
    Continue,
    Stop(Termination),
}

impl<'a> Path<'a> {
    fn weight(&self) -> f64 {
        let mut w = 1.0;
        if self.weighted {
            w *= (-self.spec.econ.q * self.t).exp();
        }
        if self.estimator == Estimator::Killing {
            w *= (-self.spec.econ.m * self.below_time).exp();
        }
        w
    }

    fn parisian_clock(&self, rng: &mut impl Rng) -> f64 {
        let m = self.spec.econ.m;
        if self.estimator == Estimator::Killing || m == 0.0 {
            f64::INFINITY
        } else {
            self.t + Exp::new(m).expect("m > 0").sample(rng)
        }
    }

    /// Handles reaching the exit level or the dividend barrier at the current state.
    fn at_upper(&mut self) -> Step {
        match self.functional {
            Functional::Exit { level } if self.u >= level => {
                self.payoff = self.weight();
                Step::Stop(Termination::Target)
            }
            Functional::Dividends(p) if self.u >= p.c2 => {
                self.payoff += self.weight() * (self.u - p.c1 - self.spec.econ.beta);
                self.dividends += 1;
                self.u = p.c1;
                Step::Continue
            }
            _ => Step::Continue,
        }
    }

    fn upper_level(&self) -> f64 {
        match self.functional {
            Functional::Exit { level } => level,
            Functional::Dividends(p) => p.c2,
        }
    }

    fn record(&self, termination: Termination) -> PathRecord {
        PathRecord {
            payoff: self.payoff,
            end_time: self.t,
            termination,
            killing_weight: (-self.spec.econ.m * self.below_time).exp(),
            dividends: self.dividends,
        }
    }
}

/// Simulates one path from `x0`.
pub fn simulate_path(
    spec: &ProblemSpec,
    functional: Functional,
    x0: f64,
    config: &SimConfig,
    streams: &mut PathStreams,
) -> PathRecord {
    let q = spec.econ.q;
    let cap = config.horizon_cap(q);
    let (horizon, end_kind) = match config.discount {
        DiscountMode::Weighted => (cap, Termination::Truncated),
        DiscountMode::Clock => {
            let e = if q > 0.0 { Exp::new(q).expect("q > 0").sample(&mut streams.discount) } else { f64::INFINITY };
            if e < cap {
                (e, Termination::Discounted)
            } else {
                (cap, Termination::Truncated)
            }
        }
    };
    let mut p = Path {
        spec,
        functional,
        estimator: config.estimator,
        weighted: config.discount == DiscountMode::Weighted,
        t: 0.0,
        u: x0,
        below_time: 0.0,
        deadline: f64::INFINITY,
        payoff: 0.0,
        dividends: 0,
    };
    let l = spec.econ.l;
    let barrier_hit = match spec.model {
        LevyModel::Brownian { .. } => x0 <= -l,
        LevyModel::CramerLundberg { .. } => x0 < -l,
    };
    if barrier_hit {
        return p.record(Termination::BarrierRuin);
    }
    if let Step::Stop(k) = p.at_upper() {
        return p.record(k);
    }
    if p.u < 0.0 {
        p.deadline = p.parisian_clock(&mut streams.parisian);
    }
    let end = match spec.model {
        LevyModel::Brownian { mu, sigma } => euler(&mut p, mu, sigma, config.dt, horizon, streams),
        LevyModel::CramerLundberg { mu, eta, alpha } => exact(&mut p, mu, eta, alpha, horizon, streams),
    };
    p.record(end.unwrap_or(end_kind))
}

/// Euler scheme; returns `None` when the horizon is reached.
fn euler(p: &mut Path, mu: f64, sigma: f64, dt: f64, horizon: f64, s: &mut PathStreams) -> Option<Termination> {
    let (b, delta) = (p.spec.refraction.b, p.spec.refraction.delta);
    let l = p.spec.econ.l;
    let sq = sigma * dt.sqrt();
    loop {
        if p.t + dt > horizon {
            return None;
        }
        let z: f64 = StandardNormal.sample(&mut s.noise);
        let was_negative = p.u < 0.0;
        let drift = if p.u >= b { mu - delta } else { mu };
        if was_negative {
            p.below_time += dt;
        }
        p.u += drift * dt + sq * z;
        p.t += dt;
        if p.u < -l {
            return Some(Termination::BarrierRuin);
        }
        if p.u < 0.0 {
            if !was_negative {
                p.deadline = p.parisian_clock(&mut s.parisian);
            }
            if p.t >= p.deadline {
                return Some(Termination::ParisianRuin);
            }
        }
        if let Step::Stop(k) = p.at_upper() {
            return Some(k);
        }
    }
}

/// Event-driven exact simulation; returns `None` when the horizon is reached.
fn exact(p: &mut Path, mu: f64, eta: f64, alpha: f64, horizon: f64, s: &mut PathStreams) -> Option<Termination> {
    let (b, delta) = (p.spec.refraction.b, p.spec.refraction.delta);
    let l = p.spec.econ.l;
    let arrivals = Exp::new(eta).expect("eta > 0");
    let claims = Exp::new(alpha).expect("alpha > 0");
    loop {
        let t_claim = p.t + arrivals.sample(&mut s.noise);
        let stop = t_claim.min(horizon);
        // deterministic drift until the next claim or the horizon
        while p.t < stop {
            if p.u < 0.0 {
                let t_zero = p.t + (-p.u) / mu;
                let seg_end = t_zero.min(stop);
                if p.deadline <= seg_end {
                    p.below_time += p.deadline - p.t;
                    p.t = p.deadline;
                    return Some(Termination::ParisianRuin);
                }
                p.below_time += seg_end - p.t;
                if t_zero <= stop {
                    p.t = t_zero;
                    p.u = 0.0;
                    p.deadline = f64::INFINITY;
                } else {
                    p.u += mu * (seg_end - p.t);
                    p.t = seg_end;
                }
                continue;
            }
            let target = p.upper_level();
            let (level, rate) = if p.u < b { (b.min(target), mu) } else { (target, mu - delta) };
            let t_hit = p.t + (level - p.u) / rate;
            if t_hit > stop {
                p.u += rate * (stop - p.t);
                p.t = stop;
                break;
            }
            p.t = t_hit;
            p.u = level;
            if level == target {
                if let Step::Stop(k) = p.at_upper() {
                    return Some(k);
                }
            }
        }
        if t_claim >= horizon {
            return None;
        }
        let was_negative = p.u < 0.0;
        p.u -= claims.sample(&mut s.noise);
        if p.u < -l {
            return Some(Termination::BarrierRuin);
        }
        if p.u < 0.0 && !was_negative {
            p.deadline = p.parisian_clock(&mut s.parisian);
        }
    }
}

pub fn simulate_paths(spec: &ProblemSpec, functional: Functional, x0: f64, config: &SimConfig) -> Result<Vec<PathRecord>> {
    let spec = spec.validated()?;
    config.check(spec.econ.q)?;
    if x0 < -spec.econ.l {
        return Err(Error::domain("simulate", format!("x0 = {x0} below the barrier")));
    }
    Ok(config.exec.map_range(config.n_paths, |k| {
        let mut streams = PathStreams::new(config.seed, k as u64);
        simulate_path(&spec, functional, x0, config, &mut streams)
    }))
}

/// Monte Carlo estimate of the policy value V_(c1,c2)(x0).
pub fn estimate_value(spec: &ProblemSpec, policy: Policy, x0: f64, config: &SimConfig) -> Result<SimEstimate> {
    Policy::new(policy.c1, policy.c2, spec.econ.beta)?;
    let records = simulate_paths(spec, Functional::Dividends(policy), x0, config)?;
    Ok(SimEstimate::from_records(&records, config.seed))
}

/// Monte Carlo estimate of E_x0[e^{-q k_c^+}; k_c^+ < T] for the uncontrolled process.
pub fn estimate_exit_laplace(spec: &ProblemSpec, x0: f64, c: f64, config: &SimConfig) -> Result<SimEstimate> {
    if x0 > c {
        return Err(Error::domain("estimate_exit_laplace", format!("x0 = {x0} above c = {c}")));
    }
    let records = simulate_paths(spec, Functional::Exit { level: c }, x0, config)?;
    Ok(SimEstimate::from_records(&records, config.seed))
}
