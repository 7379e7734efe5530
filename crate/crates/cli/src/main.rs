//! `rmtgap`: batch jobs for spacing distributions with finite-size
//! corrections and for statistics of zeros datasets.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 bad input data, 4 numerical
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmtgap::Error;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn argument(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

/// Maps library errors to exit codes. Domain errors are bad arguments for
/// the solvers but bad input data for the zeros pipeline.
pub fn classify(e: Error, data_context: bool) -> CliError {
    let code = match &e {
        Error::Argument(_) => 2,
        Error::Domain { .. } if !data_context => 2,
        Error::Domain { .. } | Error::Parse { .. } | Error::Data { .. } | Error::Io(_) => 3,
        Error::InsufficientData(_) => 3,
        Error::Precondition(_)
        | Error::Degenerate { .. }
        | Error::Continuation { .. }
        | Error::Validation(_)
        | Error::Numerical(_) => 4,
    };
    CliError { code, message: e.to_string() }
}

#[derive(Parser)]
#[command(name = "rmtgap", version, about = "Random-matrix spacing corrections and zeros statistics")]
struct Cli {
    /// Job file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a transcendent and write its series (JSON) and samples (CSV).
    Solve(SolveArgs),
    /// Tabulate the spacing density and its 1/N² coefficient.
    Spacing(SpacingArgs),
    /// Evaluate a Fredholm determinant by quadrature.
    Det(DetArgs),
    /// Extrapolate finite-N spacing densities in N.
    Extrapolate(ExtrapolateArgs),
    /// Zeros pipeline steps.
    #[command(subcommand)]
    Zeros(ZerosCommand),
}

#[derive(Args)]
pub struct SolveArgs {
    /// sigma0, sigma1, u0 or u1.
    pub kind: String,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Output prefix; writes PREFIX.json and PREFIX.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Previously written base solution for sigma1/u1.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Number of CSV sample intervals.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args)]
pub struct SpacingArgs {
    #[arg(long)]
    pub xi: Option<f64>,
    /// Grid step in s.
    #[arg(long)]
    pub grid: Option<f64>,
    /// Largest s on the grid.
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// sigma, u or both.
    #[arg(long)]
    pub path: Option<String>,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args)]
pub struct DetArgs {
    /// sine or finite.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Matrix size for the finite kernel.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Quadrature order.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Args)]
pub struct ExtrapolateArgs {
    #[arg(long)]
    pub n_from: Option<u32>,
    #[arg(long)]
    pub n_to: Option<u32>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Grid step in s.
    #[arg(long)]
    pub grid: Option<f64>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum ZerosCommand {
    /// Heights file to unit-density points.
    Unfold(UnfoldArgs),
    /// Delete each point independently with probability 1 − ξ.
    Thin(ThinArgs),
    /// Pair density from right neighbours.
    Twopoint(TwoPointArgs),
    /// Histogram of consecutive gaps.
    Nnspacing(NnSpacingArgs),
    /// Residuals of an empirical curve against theory.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct UnfoldArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// plain or base-offset.
    #[arg(long)]
    pub format: Option<String>,
    /// Re-evaluate the density every this many zeros instead of once.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ThinArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TwoPointArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct NnSpacingArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Multiply gaps by the retention probability.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Curve written by twopoint or nnspacing.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// twopoint, twopoint-correction or spacing.
    #[arg(long)]
    pub theory: Option<String>,
    /// Height setting ρ̄, α and N; defaults to the curve's first height.
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let cfg = match &cli.config {
            Some(p) => config::Config::load(p)?,
            None => config::Config::default(),
        };
        match cli.command {
            Command::Solve(a) => commands::solve(a, &cfg),
            Command::Spacing(a) => commands::spacing(a, &cfg),
            Command::Det(a) => commands::det(a, &cfg),
            Command::Extrapolate(a) => commands::extrapolate(a, &cfg),
            Command::Zeros(z) => commands::zeros(z, &cfg),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmtgap: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
