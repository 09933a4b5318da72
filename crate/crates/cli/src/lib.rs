//! Command-line front end for `impulse-core`.
//!
//! Every output carries the manifest of the run that produced it: CSV files
//! start with a `# {json}` line, JSON outputs have a `manifest` field, and
//! file outputs get a `<file>.manifest.json` sidecar with the output path and
//! wall-clock duration. `replay` re-runs the recorded command and reproduces
//! the output byte for byte.

pub mod args;
pub mod commands;
pub mod figures;
pub mod grid;
pub mod output;

use std::ffi::OsString;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use impulse_core::ProblemSpec;

use args::{Cli, Command};
use commands::{execute, read_spec, CliError};
use output::{Destination, RunManifest};

/// Runs one invocation and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
        }
    };
    match dispatch(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.status()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let (command, spec, out) = match &cli.command {
        Command::Replay(r) => {
            let m = RunManifest::read(&r.manifest)?;
            if let Command::Figures(f) = &m.command {
                if f.panel.is_none() {
                    return Err(CliError::Input("a figures manifest must name a single panel".into()));
                }
            }
            let spec = m.spec.ok_or_else(|| CliError::Input("manifest carries no problem".into()))?;
            (m.command, spec, r.out.clone())
        }
        Command::Figures(f) => return figures::run(f, cli.quiet),
        other => {
            let io = io_of(other);
            (other.clone(), read_spec(io.config.as_deref())?, io.out.clone())
        }
    };
    run_one(&command, spec, out.as_deref(), cli.quiet)
}

fn io_of(cmd: &Command) -> &args::Io {
    match cmd {
        Command::Validate(io) => io,
        Command::ScaleEval(a) => &a.grid.io,
        Command::ThetaEval(a) => &a.grid.io,
        Command::Value(a) => &a.grid.io,
        Command::Optimize(a) => &a.io,
        Command::HjbCheck(a) => &a.io,
        Command::Simulate(a) => &a.io,
        Command::Compare(a) => &a.io,
        Command::Sweep(a) => &a.io,
        Command::Figures(_) | Command::Replay(_) => unreachable!("no shared io flags"),
    }
}

fn run_one(command: &Command, spec: ProblemSpec, out: Option<&str>, quiet: bool) -> Result<i32, CliError> {
    let start = Instant::now();
    let outcome = execute(command, spec)?;
    let manifest = RunManifest::new(command.clone(), Some(spec), outcome.seeds.clone());
    Destination::parse(out).write(&outcome.output, &manifest, start.elapsed().as_secs_f64())?;
    if !quiet || outcome.status != 0 {
        eprintln!("{}", outcome.output.summary);
    }
    Ok(outcome.status)
}
