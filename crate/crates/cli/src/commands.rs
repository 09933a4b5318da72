use std::path::Path;

use impulse_core::exec::Execution;
use impulse_core::optimizer::{grid_oracle, optimize, sweep, verify_optimality, SweepParam, HJB_TOL};
use impulse_core::parisian::ThetaBasis;
use impulse_core::quad::linspace;
use impulse_core::scale::{RefractedScale, ScaleBasis, Side};
use impulse_core::simulator::{estimate_exit_laplace, estimate_value, DiscountMode, Estimator, SimConfig, SimEstimate};
use impulse_core::valuation::{exit_laplace, hjb_residual, Policy, ValueCurve, ValueFunction, KINK_RADIUS};
use impulse_core::{validate, Error, Process, ProblemSpec};
use serde_json::json;

use crate::args::*;
use crate::grid::{self, Symbols};
use crate::output::{Cell, Format, Output};

/// Failure of a command, split by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input: usage, files, JSON, parameter rules. Exit 1.
    Input(String),
    /// The numerics failed. Exit 2.
    Numeric(String),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate { .. } | Error::Nonconvergence { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Input(e)
    }
}

pub struct Outcome {
    pub output: Output,
    pub seeds: Vec<u64>,
    pub status: i32,
}

impl From<Output> for Outcome {
    fn from(output: Output) -> Self {
        Outcome { output, seeds: vec![], status: 0 }
    }
}

/// Reads a problem file without checking the parameter rules.
pub fn read_spec(path: Option<&Path>) -> Result<ProblemSpec, CliError> {
    let path = path.ok_or_else(|| CliError::Input("missing --config".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemSpec::from_json(&text)?)
}

pub fn check_spec(spec: ProblemSpec) -> Result<ProblemSpec, CliError> {
    let report = validate(&spec);
    if report.is_ok() {
        Ok(spec)
    } else {
        Err(CliError::Input(format!("invalid problem:\n{report}")))
    }
}

fn symbols(spec: &ProblemSpec) -> Symbols {
    Symbols::new(spec.econ.l, spec.refraction.b)
}

fn basis(spec: &ProblemSpec) -> Result<ThetaBasis, CliError> {
    Ok(ThetaBasis::new(spec)?)
}

/// A policy and whether it is the optimum.
fn resolve_policy(spec: &ProblemSpec, t: &ThetaBasis, text: &str) -> Result<(Policy, bool), CliError> {
    if text.trim() == "optimal" {
        Ok((optimize(t)?.policy, true))
    } else {
        let (c1, c2) = grid::parse_pair(text)?;
        Ok((Policy::new(c1, c2, spec.econ.beta)?, false))
    }
}

fn curve<'a>(t: &'a ThetaBasis, policy: Policy, optimal: bool) -> Result<ValueCurve<'a>, CliError> {
    Ok(if optimal { ValueCurve::optimal(t, policy)? } else { ValueCurve::new(t, policy)? })
}

pub fn execute(cmd: &Command, spec: ProblemSpec) -> Result<Outcome, CliError> {
    if let Command::Validate(_) = cmd {
        return Ok(validate_cmd(&spec));
    }
    let spec = check_spec(spec)?;
    match cmd {
        Command::ScaleEval(a) => scale_eval(&spec, a).map(Outcome::from),
        Command::ThetaEval(a) => theta_eval(&spec, a).map(Outcome::from),
        Command::Value(a) => value(&spec, a).map(Outcome::from),
        Command::Optimize(a) => optimize_cmd(&spec, a).map(Outcome::from),
        Command::HjbCheck(a) => hjb_check(&spec, a).map(Outcome::from),
        Command::Simulate(a) => simulate(&spec, a),
        Command::Compare(a) => compare(&spec, a),
        Command::Sweep(a) => sweep_cmd(&spec, a).map(Outcome::from),
        Command::Figures(a) => {
            let panel = a.panel.as_deref().ok_or_else(|| CliError::Input("figures needs a single --panel here".into()))?;
            crate::figures::panel(&spec, panel).map(Outcome::from)
        }
        Command::Validate(_) | Command::Replay(_) => unreachable!("handled by the dispatcher"),
    }
}

fn validate_cmd(spec: &ProblemSpec) -> Outcome {
    let report = validate(spec);
    let mut out = Output::table(vec!["rule", "message"]);
    for v in &report.violations {
        out.push(vec![v.rule.into(), v.message.clone().into()]);
    }
    out.detail = Some(json!({ "valid": report.is_ok() }));
    out.preferred = Format::Json;
    out.summary = if report.is_ok() { "valid".into() } else { format!("invalid problem:\n{report}") };
    Outcome { output: out, seeds: vec![], status: if report.is_ok() { 0 } else { 1 } }
}

fn scale_eval(spec: &ProblemSpec, a: &ScaleArgs) -> Result<Output, CliError> {
    let sym = symbols(spec);
    let xs = grid::parse(&a.grid.grid, &sym)?;
    let level = grid::eval(&a.a, &sym)?;
    let q = a.q.unwrap_or(spec.econ.q);
    let wx = ScaleBasis::new(spec, q, Process::X)?;
    let wy = ScaleBasis::new(spec, q, Process::Y)?;
    let rs = RefractedScale::new(spec, q)?;
    let columns = match a.process {
        None => vec!["x", "W", "W_prime", "W_Y", "W_Y_prime", "w", "w_prime"],
        Some(_) => vec!["x", "W", "W_prime", "w", "w_prime"],
    };
    let mut out = Output::table(columns);
    for x in xs {
        let mut row: Vec<Cell> = vec![x.into()];
        if a.process != Some(ProcessArg::Y) {
            row.extend([wx.eval(x).into(), wx.deriv_or_zero(x).into()]);
        }
        if a.process != Some(ProcessArg::X) {
            row.extend([wy.eval(x).into(), wy.deriv_or_zero(x).into()]);
        }
        row.push(rs.eval(x, level).ok().into());
        row.push(rs.deriv(x, level, Some(Side::Right)).ok().into());
        out.push(row);
    }
    out.summary = format!("{} points, q = {q}, a = {level}", out.rows.len());
    Ok(out)
}

fn theta_eval(spec: &ProblemSpec, a: &ThetaArgs) -> Result<Output, CliError> {
    if let Some(d) = a.derivs.iter().find(|&&d| d > 2) {
        return Err(CliError::Input(format!("--derivs: order {d} is not one of 0, 1, 2")));
    }
    let want = |d: u8| a.derivs.contains(&d);
    let xs = grid::parse(&a.grid.grid, &symbols(spec))?;
    let t = basis(spec)?;
    let mut columns = vec!["x", "segment"];
    if want(0) {
        columns.push("theta");
    }
    if want(1) {
        columns.extend(["theta_prime_left", "theta_prime_right"]);
    }
    if want(2) {
        columns.push("theta_second");
    }
    let mut out = Output::table(columns);
    for x in xs {
        if x < -t.l() {
            return Err(CliError::Input(format!("grid point {x} lies below -l")));
        }
        let seg = format!("{:?}", t.segment(x)).to_lowercase();
        let mut row: Vec<Cell> = vec![x.into(), seg.into()];
        if want(0) {
            row.push(t.theta(x)?.into());
        }
        if want(1) {
            row.push(t.theta_deriv_side(x, Side::Left).ok().into());
            row.push(t.theta_deriv_side(x, Side::Right).ok().into());
        }
        if want(2) {
            row.push(t.theta_second(x).ok().into());
        }
        out.push(row);
    }
    out.detail = t.breakpoints().ok().map(|b| json!({ "breakpoints": b }));
    out.summary = format!("{} points", out.rows.len());
    Ok(out)
}

fn value(spec: &ProblemSpec, a: &ValueArgs) -> Result<Output, CliError> {
    let t = basis(spec)?;
    let (policy, optimal) = match (a.c1, a.c2) {
        (Some(c1), Some(c2)) => (Policy::new(c1, c2, spec.econ.beta)?, false),
        _ => resolve_policy(spec, &t, &a.policy)?,
    };
    let xs = grid::parse(&a.grid.grid, &symbols(spec).with_policy(policy.c1, policy.c2))?;
    let v = curve(&t, policy, optimal)?;
    let mut out = Output::table(vec!["x", "value", "value_prime"]);
    for x in xs {
        if x < -t.l() {
            return Err(CliError::Input(format!("grid point {x} lies below -l")));
        }
        out.push(vec![x.into(), v.value(x).into(), v.d1(x).into()]);
    }
    out.detail = Some(json!({ "policy": policy, "optimal": optimal, "k": v.k }));
    out.summary = format!("policy ({}, {}), {} points", policy.c1, policy.c2, out.rows.len());
    Ok(out)
}

fn optimize_cmd(spec: &ProblemSpec, a: &OptimizeArgs) -> Result<Output, CliError> {
    let t = basis(spec)?;
    let r = optimize(&t)?;
    let bp = t.breakpoints().ok();
    let check = verify_optimality(&t, &r, Execution::default())?;
    let oracle = if a.oracle { Some(grid_oracle(&t, r.search_box, 1e-2, a.oracle_step, Execution::default())?) } else { None };
    let mut out = Output::table(vec!["c1", "c2", "h", "case", "max_residual", "eps1", "eps2", "verified", "flags"]);
    out.push(vec![
        r.policy.c1.into(),
        r.policy.c2.into(),
        r.h_value.into(),
        r.case.as_str().into(),
        r.residuals.max().into(),
        bp.as_ref().map(|b| b.eps1).into(),
        bp.as_ref().map(|b| b.eps2).into(),
        check.passed().into(),
        r.flags.join("; ").into(),
    ]);
    out.detail = Some(json!({ "result": r, "breakpoints": bp, "verification": check, "grid_oracle": oracle }));
    out.preferred = Format::Json;
    out.summary = format!("c1* = {}, c2* = {}, case {}, verified {}", r.policy.c1, r.policy.c2, r.case.as_str(), check.passed());
    Ok(out)
}

fn hjb_check(spec: &ProblemSpec, a: &HjbArgs) -> Result<Output, CliError> {
    let t = basis(spec)?;
    let (policy, optimal) = resolve_policy(spec, &t, &a.policy)?;
    let v = curve(&t, policy, optimal)?;
    let xs = grid::parse(&a.grid, &symbols(spec).with_policy(policy.c1, policy.c2))?;
    let kinks = v.kinks();
    let xs: Vec<f64> = xs
        .into_iter()
        .filter(|&x| x > -t.l() && kinks.iter().all(|k| (x - k).abs() >= KINK_RADIUS))
        .collect();
    let q = spec.econ.q;
    let rows = Execution::default().map(&xs, |&x| (x, v.value(x), hjb_residual(&t, &v, x)));
    let mut out = Output::table(vec!["x", "value", "residual", "region", "ok"]);
    let mut failures = 0;
    for (x, val, res) in rows {
        let res = res?;
        let inside = x < policy.c2;
        let ok = if inside { res.abs() < HJB_TOL * (q * val + 1.0) } else { res <= HJB_TOL };
        failures += usize::from(!ok);
        out.push(vec![x.into(), val.into(), res.into(), if inside { "continuation" } else { "payout" }.into(), ok.into()]);
    }
    out.detail = Some(json!({ "policy": policy, "optimal": optimal, "failures": failures }));
    out.summary = format!("{} points, {failures} outside tolerance", out.rows.len());
    Ok(out)
}

fn sim_config(mc: &McArgs) -> SimConfig {
    let cfg = SimConfig::new(mc.paths, mc.seed).with_dt(mc.dt).with_exec(if mc.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    });
    let cfg = cfg.with_estimator(match mc.estimator {
        EstimatorArg::Clock => Estimator::Clock,
        EstimatorArg::Killing => Estimator::Killing,
    });
    cfg.with_discount(match mc.discount {
        DiscountArg::Clock => DiscountMode::Clock,
        DiscountArg::Weighted => DiscountMode::Weighted,
    })
}

fn estimate_cells(e: &SimEstimate, analytic: f64) -> Vec<Cell> {
    vec![
        analytic.into(),
        e.mean.into(),
        e.stderr.into(),
        e.z_score(analytic).into(),
        e.n_paths.into(),
        e.n_effective.into(),
        e.seed.into(),
        e.truncation_fraction.into(),
    ]
}

const EST_COLUMNS: [&str; 8] = ["analytic", "mc_mean", "mc_stderr", "z_score", "n_paths", "n_effective", "seed", "truncation_fraction"];

fn simulate(spec: &ProblemSpec, a: &SimulateArgs) -> Result<Outcome, CliError> {
    let t = basis(spec)?;
    let cfg = sim_config(&a.mc);
    let mut columns = vec!["functional", "x0", "c1", "c2", "level"];
    columns.extend(EST_COLUMNS);
    let mut out = Output::table(columns);
    let sym = symbols(spec);
    let row = match &a.exit_level {
        Some(level) => {
            let c = grid::eval(level, &sym)?;
            let x0 = grid::eval(&a.x0, &sym)?;
            let e = estimate_exit_laplace(spec, x0, c, &cfg)?;
            let mut row: Vec<Cell> = vec!["exit".into(), x0.into(), Cell::Empty, Cell::Empty, c.into()];
            row.extend(estimate_cells(&e, exit_laplace(&t, x0, c)?));
            row
        }
        None => {
            let (p, optimal) = resolve_policy(spec, &t, &a.policy)?;
            let x0 = grid::eval(&a.x0, &sym.with_policy(p.c1, p.c2))?;
            let e = estimate_value(spec, p, x0, &cfg)?;
            let mut row: Vec<Cell> = vec!["value".into(), x0.into(), p.c1.into(), p.c2.into(), Cell::Empty];
            row.extend(estimate_cells(&e, curve(&t, p, optimal)?.value(x0)));
            row
        }
    };
    out.push(row);
    out.preferred = Format::Json;
    out.summary = format!("{} paths, seed {}", a.mc.paths, a.mc.seed);
    Ok(Outcome { output: out, seeds: vec![a.mc.seed], status: 0 })
}

fn compare(spec: &ProblemSpec, a: &CompareArgs) -> Result<Outcome, CliError> {
    let t = basis(spec)?;
    let cfg = sim_config(&a.mc);
    let (p, optimal) = resolve_policy(spec, &t, &a.policy)?;
    let sym = symbols(spec).with_policy(p.c1, p.c2);
    let l = spec.econ.l;
    let mut columns = vec!["functional", "x0", "c1", "c2", "level"];
    columns.extend(EST_COLUMNS);
    let mut out = Output::table(columns);
    match a.what {
        CompareWhat::Value => {
            let xs = match &a.grid {
                Some(g) => grid::parse(g, &sym)?,
                None => linspace(-l / 2.0, p.c2 + 1.0, 6),
            };
            let v = curve(&t, p, optimal)?;
            for x0 in xs {
                let e = estimate_value(spec, p, x0, &cfg)?;
                let mut row: Vec<Cell> = vec!["value".into(), x0.into(), p.c1.into(), p.c2.into(), Cell::Empty];
                row.extend(estimate_cells(&e, v.value(x0)));
                out.push(row);
            }
        }
        CompareWhat::Exit => {
            let c = match &a.level {
                Some(s) => grid::eval(s, &sym)?,
                None => p.c2,
            };
            let xs = match &a.grid {
                Some(g) => grid::parse(g, &sym)?,
                None => linspace(-l / 2.0, c, 7)[..6].to_vec(),
            };
            for x0 in xs {
                let e = estimate_exit_laplace(spec, x0, c, &cfg)?;
                let mut row: Vec<Cell> = vec!["exit".into(), x0.into(), Cell::Empty, Cell::Empty, c.into()];
                row.extend(estimate_cells(&e, exit_laplace(&t, x0, c)?));
                out.push(row);
            }
        }
    }
    let worst = out
        .rows
        .iter()
        .filter_map(|r| match r[8] {
            Cell::F(z) => Some(z.abs()),
            _ => None,
        })
        .fold(0.0, f64::max);
    out.summary = format!("{} points, max |z| = {worst:.2}", out.rows.len());
    Ok(Outcome { output: out, seeds: vec![a.mc.seed], status: 0 })
}

fn sweep_cmd(spec: &ProblemSpec, a: &SweepArgs) -> Result<Output, CliError> {
    let param = SweepParam::parse(&a.param)
        .ok_or_else(|| CliError::Input(format!("unknown parameter `{}`; use beta, delta, b, l, m or q", a.param)))?;
    let values = grid::parse(&a.range, &symbols(spec))?;
    Ok(sweep_table(spec, param, &values))
}

/// Optimal pairs across a parameter; failing rows carry the error text.
pub fn sweep_table(spec: &ProblemSpec, param: SweepParam, values: &[f64]) -> Output {
    let mut out = Output::table(vec!["param", "value", "c1", "c2", "h", "case", "eps2", "flags", "error"]);
    let mut failed = 0;
    for row in sweep(spec, param, values, Execution::default()) {
        let eps2 = ThetaBasis::new(&param.apply(spec, row.value)).and_then(|t| t.breakpoints()).ok().map(|b| b.eps2);
        match row.result {
            Ok(r) => out.push(vec![
                param.name().into(),
                row.value.into(),
                r.policy.c1.into(),
                r.policy.c2.into(),
                r.h_value.into(),
                r.case.as_str().into(),
                eps2.into(),
                r.flags.join("; ").into(),
                Cell::Empty,
            ]),
            Err(e) => {
                failed += 1;
                let mut cells = vec![param.name().into(), row.value.into()];
                cells.extend(std::iter::repeat_n(Cell::Empty, 6));
                cells.push(e.into());
                out.push(cells);
            }
        }
    }
    out.summary = format!("{} values of {}, {failed} failed", values.len(), param.name());
    out
}
