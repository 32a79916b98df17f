//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spinwave", version, about = "Correlation spreading in the periodic XY spin chain")]
pub struct Cli {
    /// TOML file with default values for any flag; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (falls back to the config file, then SPINWAVE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Output format; inferred from the output extension, csv otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Invariants,
    Oracle,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the single-particle energy and group velocity.
    Dispersion(DispersionArgs),
    /// Correlation field at fixed parameters.
    Evolve(EvolveArgs),
    /// Correlation field across a sudden parameter change.
    Quench(QuenchArgs),
    /// Correlation field under a time-dependent schedule.
    Ramp(RampArgs),
    /// Compare the closed forms with an exact finite ring.
    Oracle(OracleArgs),
    /// Run built-in self-checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Params {
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Grid {
    /// Largest separation.
    #[arg(long)]
    pub xmax: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Time spacing.
    #[arg(long)]
    pub dt: Option<f64>,
    /// zz, string-xy, string-xx or le-bound.
    #[arg(long)]
    pub observable: Option<String>,
    /// Quadrature node count; sized from the light cone when omitted.
    #[arg(long)]
    pub quadrature: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TwoPoint {
    #[arg(long, allow_negative_numbers = true)]
    pub gamma0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub params: Params,
    /// Number of wavenumbers.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub params: Params,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct QuenchArgs {
    /// Schedule file with two hold segments.
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    #[command(flatten)]
    pub ends: TwoPoint,
    /// Quench time.
    #[arg(long)]
    pub t1: Option<f64>,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct RampArgs {
    /// Schedule file.
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    #[command(flatten)]
    pub ends: TwoPoint,
    /// Start of a linear ramp built from the endpoint flags.
    #[arg(long)]
    pub ramp_start: Option<f64>,
    /// End of that ramp.
    #[arg(long)]
    pub ramp_end: Option<f64>,
    /// Integration step for the ordered product.
    #[arg(long)]
    pub step: Option<f64>,
    /// Use the time-averaged Hamiltonian instead of the ordered product.
    #[arg(long)]
    pub averaged: bool,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Ring size.
    #[arg(long)]
    pub sites: Option<usize>,
    /// Schedule file; constant parameters from the flags otherwise.
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
    /// Largest error tolerated inside the boundary-safe window.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub suite: Option<SuiteArg>,
}
