//! `parallax`: run verification suites and dump brackets, associators, flows and
//! loop operations for the built-in parallelized manifolds.

mod commands;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::suites::Suite;

#[derive(Debug, Parser)]
#[command(
    name = "parallax",
    version,
    about = "Numerical checks on parallelized manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the manifold catalog with dimensions.
    List,
    /// Run invariant suites at seeded random points.
    Verify(VerifyArgs),
    /// Bracket tensor `b[i][j][k]` at a point.
    Bracket(TensorArgs),
    /// Skew-associator tensor `a[direction][arg1][arg2][k]` at a point.
    Assoc(AssocArgs),
    /// Flow of `ρ(ξ)` from a point for time `t`.
    Flow(FlowArgs),
    /// Product `ξ·s`.
    Product(ProductArgs),
    /// Right quotient `p/s`.
    Quotient(QuotientArgs),
    /// Factor `p` into flow steps starting from `s`.
    Factorize(QuotientArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TolProfile {
    Default,
    Strict,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Catalog key (see `parallax list`).
    #[arg(value_name = "MANIFOLD")]
    manifold_pos: Option<String>,
    #[arg(long = "manifold", value_name = "K")]
    manifold_flag: Option<String>,
    /// Write JSON here (`-` for stdout).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write CSV here (`-` for stdout).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long = "tol-profile", value_enum, default_value = "default")]
    tol_profile: TolProfile,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct TensorArgs {
    #[command(flatten)]
    common: Common,
    /// Ambient coordinates, comma separated; normalized on input.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    point: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eta: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AssocArgs {
    #[command(flatten)]
    tensor: TensorArgs,
    /// Derivative direction for a single evaluation with `--xi`, `--eta`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma: Option<Vec<f64>>,
    /// Use finite differences even when a closed form exists.
    #[arg(long)]
    fd: bool,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    common: Common,
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    point: Vec<f64>,
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    xi: Vec<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t: f64,
    /// Integrate numerically even when a closed form exists.
    #[arg(long)]
    numeric: bool,
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[command(flatten)]
    common: Common,
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    point: Vec<f64>,
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    xi: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct QuotientArgs {
    #[command(flatten)]
    common: Common,
    /// Base point `s`.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    point: Vec<f64>,
    /// Target point `p`.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    target: Vec<f64>,
    #[arg(long = "trust-radius", default_value_t = parallax::loops::DEFAULT_TRUST_RADIUS)]
    trust_radius: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
