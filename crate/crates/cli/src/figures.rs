//! Long-format CSV bundles for the sensitivity and threshold figures.

use std::path::Path;
use std::time::Instant;

use impulse_core::optimizer::SweepParam;
use impulse_core::parisian::ThetaBasis;
use impulse_core::quad::linspace;
use impulse_core::scale::Side;
use impulse_core::{LevyModel, ProblemSpec};

use crate::args::{Command, FigureArgs};
use crate::commands::{sweep_table, CliError};
use crate::output::{Destination, Format, Output, RunManifest};

pub const PANELS: [&str; 14] = [
    "theta_m",
    "theta_delta",
    "theta_b",
    "theta_l",
    "theta_prime_m",
    "theta_prime_delta",
    "theta_prime_b",
    "theta_prime_l",
    "theta_prime_markers",
    "breakpoints",
    "optimal_beta",
    "optimal_delta",
    "optimal_b",
    "optimal_l",
];

const X_MAX: f64 = 20.0;
const X_STEP: f64 = 0.05;
const SWEEP_POINTS: usize = 25;

/// Parameter values drawn as separate curves.
fn curve_values(spec: &ProblemSpec, param: SweepParam) -> Vec<f64> {
    let bm = matches!(spec.model, LevyModel::Brownian { .. });
    match (param, bm) {
        (SweepParam::M, true) => vec![0.01, 0.05, 0.2],
        (SweepParam::Delta, true) => vec![0.0, 0.03, 0.1],
        (SweepParam::B, true) => vec![1.0, 3.0, 5.0],
        (SweepParam::M, false) => vec![0.1, 0.5, 1.0],
        (SweepParam::Delta, false) => vec![0.05, 0.15, 0.25],
        (SweepParam::B, false) => vec![2.0, 4.0, 6.0],
        _ => vec![2.0, 4.0, 6.0],
    }
}

/// Ranges of the optimal-threshold sweeps. Zero cost and zero depth are not
/// admissible, so those ranges start just above 0.
fn sweep_values(spec: &ProblemSpec, param: SweepParam) -> Vec<f64> {
    let bm = matches!(spec.model, LevyModel::Brownian { .. });
    let (lo, hi) = match (param, bm) {
        (SweepParam::Beta, _) => (0.05, 2.0),
        (SweepParam::Delta, true) => (0.0, 0.2),
        (SweepParam::Delta, false) => (0.0, 0.25),
        (SweepParam::B, true) => (0.0, 6.0),
        (SweepParam::B, false) => (0.0, 7.0),
        (SweepParam::L, true) => (0.25, 6.0),
        _ => (0.25, 7.0),
    };
    linspace(lo, hi, SWEEP_POINTS)
}

fn xs_for(l: f64) -> Vec<f64> {
    let n = ((X_MAX + l) / X_STEP).round() as usize + 1;
    linspace(-l, X_MAX, n)
}

fn curve_family(spec: &ProblemSpec, param: SweepParam, derivative: bool) -> Result<Output, CliError> {
    let columns = if derivative {
        vec!["param", "value", "x", "theta_prime_left", "theta_prime_right"]
    } else {
        vec!["param", "value", "x", "theta"]
    };
    let mut out = Output::table(columns);
    for v in curve_values(spec, param) {
        let s = param.apply(spec, v);
        let t = ThetaBasis::new(&s)?;
        for x in xs_for(s.econ.l) {
            let mut row = vec![param.name().into(), v.into(), x.into()];
            if derivative {
                row.push(t.theta_deriv_side(x, Side::Left).ok().into());
                row.push(t.theta_deriv_side(x, Side::Right).ok().into());
            } else {
                row.push(t.theta(x)?.into());
            }
            out.push(row);
        }
    }
    Ok(out)
}

const CURVE_PARAMS: [SweepParam; 4] = [SweepParam::M, SweepParam::Delta, SweepParam::B, SweepParam::L];

/// theta' on both sides of 0 and b for every drawn curve.
fn markers(spec: &ProblemSpec) -> Result<Output, CliError> {
    let mut out = Output::table(vec!["param", "value", "x", "left", "right", "jump"]);
    for param in CURVE_PARAMS {
        for v in curve_values(spec, param) {
            let s = param.apply(spec, v);
            let t = ThetaBasis::new(&s)?;
            let mut at = vec![0.0];
            if s.refraction.b > 0.0 {
                at.push(s.refraction.b);
            }
            for x in at {
                let left = t.theta_deriv_side(x, Side::Left)?;
                let right = t.theta_deriv_side(x, Side::Right)?;
                out.push(vec![param.name().into(), v.into(), x.into(), left.into(), right.into(), (right - left).into()]);
            }
        }
    }
    Ok(out)
}

fn breakpoints(spec: &ProblemSpec) -> Result<Output, CliError> {
    let mut out = Output::table(vec!["param", "value", "eps1", "eps2", "zeta1", "zeta2", "zeta3", "tail_branch"]);
    for param in CURVE_PARAMS {
        for v in curve_values(spec, param) {
            let bp = ThetaBasis::new(&param.apply(spec, v))?.breakpoints()?;
            out.push(vec![
                param.name().into(),
                v.into(),
                bp.eps1.into(),
                bp.eps2.into(),
                bp.zeta1.into(),
                bp.zeta2.into(),
                bp.zeta3.into(),
                bp.tail_branch.into(),
            ]);
        }
    }
    Ok(out)
}

pub fn panel(spec: &ProblemSpec, name: &str) -> Result<Output, CliError> {
    let param_of = |s: &str| SweepParam::parse(s).ok_or_else(|| CliError::Input(format!("unknown panel `{name}`")));
    let mut out = if let Some(p) = name.strip_prefix("theta_prime_") {
        if p == "markers" {
            markers(spec)?
        } else {
            curve_family(spec, param_of(p)?, true)?
        }
    } else if let Some(p) = name.strip_prefix("theta_") {
        curve_family(spec, param_of(p)?, false)?
    } else if let Some(p) = name.strip_prefix("optimal_") {
        let param = param_of(p)?;
        sweep_table(spec, param, &sweep_values(spec, param))
    } else if name == "breakpoints" {
        breakpoints(spec)?
    } else {
        return Err(CliError::Input(format!("unknown panel `{name}`; expected one of {}", PANELS.join(", "))));
    };
    out.summary = format!("panel {name}: {} rows", out.rows.len());
    Ok(out)
}

fn write_bundle(spec: &ProblemSpec, dir: &Path, panels: &[&str], quiet: bool) -> usize {
    let mut failed = 0;
    for &name in panels {
        let start = Instant::now();
        let args = FigureArgs { config: None, out_dir: Default::default(), panel: Some(name.to_string()) };
        let manifest = RunManifest::new(Command::Figures(args), Some(*spec), vec![]);
        let path = dir.join(format!("{name}.csv"));
        let result = panel(spec, name).and_then(|out| {
            Destination::File(path.clone(), Format::Csv)
                .write(&out, &manifest, start.elapsed().as_secs_f64())
                .map(|_| out.summary)
                .map_err(CliError::Input)
        });
        match result {
            Ok(summary) if !quiet => eprintln!("{}: {summary}", path.display()),
            Ok(_) => {}
            Err(e) => {
                failed += 1;
                eprintln!("{}: failed: {}", path.display(), e.message());
            }
        }
    }
    failed
}

/// Writes every requested panel; a failing panel does not stop the others.
pub fn run(args: &FigureArgs, quiet: bool) -> Result<i32, CliError> {
    let panels: Vec<&str> = match &args.panel {
        Some(p) if !PANELS.contains(&p.as_str()) => {
            return Err(CliError::Input(format!("unknown panel `{p}`; expected one of {}", PANELS.join(", "))));
        }
        Some(p) => vec![p.as_str()],
        None => PANELS.to_vec(),
    };
    let bundles: Vec<(ProblemSpec, std::path::PathBuf)> = match &args.config {
        Some(path) => {
            let spec = crate::commands::check_spec(crate::commands::read_spec(Some(path))?)?;
            vec![(spec, args.out_dir.clone())]
        }
        None => vec![
            (ProblemSpec::brownian_reference(), args.out_dir.join("brownian")),
            (ProblemSpec::cramer_lundberg_reference(), args.out_dir.join("cramer_lundberg")),
        ],
    };
    let failed: usize = bundles.iter().map(|(spec, dir)| write_bundle(spec, dir, &panels, quiet)).sum();
    Ok(if failed == 0 { 0 } else { 2 })
}
