use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Parisian-refracted impulse dividend problems: evaluation, optimisation and simulation.
#[derive(Parser, Debug)]
#[command(name = "impulse", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Suppress the summary printed on stderr
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Check a problem file against every parameter rule
    Validate(Io),
    /// Tabulate W, the Y-scale function and w(x; a)
    ScaleEval(ScaleArgs),
    /// Tabulate theta and its derivatives
    ThetaEval(ThetaArgs),
    /// Tabulate the value of a (c1, c2) policy
    Value(ValueArgs),
    /// Find the optimal (c1*, c2*)
    Optimize(OptimizeArgs),
    /// HJB residuals of a policy's value function
    HjbCheck(HjbArgs),
    /// Monte Carlo estimate of a policy value or exit transform
    Simulate(SimulateArgs),
    /// Monte Carlo against the closed forms on a grid of starting points
    Compare(CompareArgs),
    /// Optimal thresholds across one parameter
    Sweep(SweepArgs),
    /// Plot-ready CSV bundles for the sensitivity figures
    Figures(FigureArgs),
    /// Re-run the command recorded in an output's manifest
    Replay(ReplayArgs),
}

/// Input and output flags shared by every subcommand.
#[derive(Args, Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Io {
    /// Problem specification (JSON)
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output file, or `csv` / `json` to pick the stdout format; `-` is stdout
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    /// Evaluation grid `lo:hi:n`; bounds may use l and b (and c1, c2 where a
    /// policy is given), e.g. `-l:b+3l:200`
    #[arg(long, default_value = "-l:b+3l:200", allow_hyphen_values = true)]
    pub grid: String,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,

    /// Discount rate; defaults to q from the problem file
    #[arg(long)]
    pub q: Option<f64>,

    /// Lower level a of w(x; a); defaults to -l
    #[arg(long, default_value = "-l", allow_hyphen_values = true)]
    pub a: String,

    /// Tabulate only W of this process (X, or Y with the reduced drift)
    #[arg(long, value_enum, ignore_case = true)]
    pub process: Option<ProcessArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessArg {
    X,
    Y,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,

    /// Derivative orders to tabulate, from 0, 1, 2
    #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
    pub derivs: Vec<u8>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,

    /// `c1,c2` or `optimal`
    #[arg(long, default_value = "optimal")]
    pub policy: String,

    /// Lower threshold; with --c2, replaces --policy
    #[arg(long, requires = "c2", allow_hyphen_values = true)]
    pub c1: Option<f64>,

    #[arg(long, requires = "c1", allow_hyphen_values = true)]
    pub c2: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    /// Evaluation grid; bounds may also use c1 and c2 of the policy
    #[arg(long, default_value = "-l:c2+3l:400", allow_hyphen_values = true)]
    pub grid: String,

    /// `c1,c2` or `optimal`
    #[arg(long, default_value = "optimal")]
    pub policy: String,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    /// Also run the refined grid oracle
    #[arg(long)]
    pub oracle: bool,

    /// Final step of the grid oracle
    #[arg(long, default_value_t = 1e-4)]
    pub oracle_step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    Clock,
    Killing,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountArg {
    Clock,
    Weighted,
}

/// Monte Carlo controls.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = EstimatorArg::Clock)]
    pub estimator: EstimatorArg,

    #[arg(long, value_enum, default_value_t = DiscountArg::Clock)]
    pub discount: DiscountArg,

    /// Euler step for the Brownian model
    #[arg(long, default_value_t = 2.5e-3)]
    pub dt: f64,

    /// Run paths on one thread
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    /// `c1,c2` or `optimal`; ignored with --exit-level
    #[arg(long, default_value = "optimal")]
    pub policy: String,

    /// Estimate the exit transform to this level instead of a policy value
    #[arg(long, allow_hyphen_values = true)]
    pub exit_level: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,

    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareWhat {
    Value,
    Exit,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    #[arg(long, value_enum)]
    pub what: CompareWhat,

    /// `c1,c2` or `optimal`
    #[arg(long, default_value = "optimal")]
    pub policy: String,

    /// Exit level; defaults to c2 of the policy
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<String>,

    /// Starting points `lo:hi:n`; defaults to 6 points from -l/2 to just past c2
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,

    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,

    /// One of beta, delta, b, l, m, q
    #[arg(long)]
    pub param: String,

    /// `lo:hi:n`
    #[arg(long, allow_hyphen_values = true)]
    pub range: String,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureArgs {
    /// Base problem; without it both reference problems are used
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Directory for the CSV bundle
    #[arg(long, value_name = "DIR", default_value = "figures")]
    #[serde(skip)]
    pub out_dir: PathBuf,

    /// Produce a single panel
    #[arg(long)]
    pub panel: Option<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A CSV or JSON output, or a `.manifest.json` sidecar
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,

    /// Where to write the reproduced output; `-` is stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
}
