//! Command-line front end.

mod commands;
mod input;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub use input::parse_indices;

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Validation = 2,
    Budget = 3,
    IdentityFailure = 4,
}

impl ExitStatus {
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Budget { .. } | Error::Refused(_) => ExitStatus::Budget,
            _ => ExitStatus::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonDoc,
}

#[derive(Debug, Parser)]
#[command(
    name = "poisson-chaos",
    version,
    about = "Chaos calculus on finite atomic Poisson spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the product formula for two kernels: regrouped classical terms,
    /// word enumeration and the pathwise identity on sampled configurations.
    ProductCheck(ProductCheckArgs),
    /// Fourth-moment diagnostics along a kernel sequence.
    Diagnose(DiagnoseArgs),
    /// Multivariate diagnostics for coordinates placed on disjoint atom blocks.
    DiagnoseMv(DiagnoseMvArgs),
    /// Chaos kernels of a functional from expected iterated differences.
    Decompose(DecomposeArgs),
    /// Sampled values of multiple integrals, one column per kernel.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output path (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ProductCheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Space document; defaults to `--atoms` unit-mass atoms.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Number of unit-mass atoms when no space document is given.
    #[arg(long, default_value_t = 2)]
    pub atoms: usize,
    /// Kernel document with a two-element `kernels` array; random kernels
    /// drawn from `--seed` when omitted.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    /// Orders `p,q` of the random kernels.
    #[arg(long, default_value = "2,2")]
    pub orders: String,
    /// Sampled configurations for the pathwise identity.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Largest accepted relative residual.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// Named family: `uniform` or `block-tensor`.
    #[arg(long, conflicts_with = "kernels")]
    pub family: Option<String>,
    /// Family parameter (atom mass for `uniform`, block size for `block-tensor`).
    #[arg(long)]
    pub param: Option<f64>,
    /// Explicit family document (`sequence` of per-index kernels).
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    /// Space for explicit kernels that do not carry their own.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Inclusive index range `A..B`.
    #[arg(long, default_value = "1..50")]
    pub indices: String,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Monte Carlo samples for the Kolmogorov–Smirnov distance (skipped when omitted).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Terminal value below which a vanishing quantity counts as converged.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Target variance of the limit.
    #[arg(long, default_value_t = 1.0)]
    pub target: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseMvArgs {
    #[command(flatten)]
    pub common: Common,
    /// One named family per coordinate (repeat the flag).
    #[arg(long, required_unless_present = "kernels")]
    pub family: Vec<String>,
    /// Family parameters, matched to `--family` by position.
    #[arg(long)]
    pub param: Vec<f64>,
    /// Explicit document with a `sequence` of per-index coordinate lists.
    #[arg(long, conflicts_with = "family")]
    pub kernels: Option<PathBuf>,
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value = "1..50")]
    pub indices: String,
    /// Target covariance as a JSON matrix; identity when omitted.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    /// Document with a `functional` entry.
    #[arg(long)]
    pub kernels: PathBuf,
    /// Highest chaos order to extract; the declared order when omitted.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Certified truncation error of each expectation.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Largest admissible `n (K+1)^n` for one expectation sweep.
    #[arg(long, default_value_t = 5e7)]
    pub budget: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::Validation as i32
            } else {
                0
            };
        }
    };
    match commands::run(&cli.command) {
        Ok(status) => status as i32,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::for_error(&e) as i32
        }
    }
}
