//! `vortexlab` command-line driver.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vortexlab::VortexError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(VortexError),
}

impl From<VortexError> for CliError {
    fn from(e: VortexError) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(VortexError::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => e.exit_code() as u8,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vortexlab", version, about = "Spinning vortex solitons: profiles, asymptotics, sector spectra")]
pub struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Physics {
    /// Nonlinearity exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Frequency.
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Radial grid spacing (default 1/192).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Outer boundary (default α₀m + 40/√ω).
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    /// Solve without reading or writing the profile cache.
    #[arg(long = "no-cache")]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct ProfileSource {
    #[command(flatten)]
    pub physics: Physics,
    /// Vortex spin.
    #[arg(long)]
    pub m: Option<u32>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Use this profile file instead of the cache.
    #[arg(long, value_name = "FILE")]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Random,
    Eigenvector,
    File,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar constants of the 1D soliton problem.
    Constants(Physics),
    /// Solve the radial profile equation.
    Profile {
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        m: Option<u32>,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the profile JSON here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Error norms against the shifted soliton and their decay rates.
    Asymptotics {
        #[command(flatten)]
        physics: Physics,
        /// Comma-separated spins.
        #[arg(long = "m-list")]
        m_list: Option<String>,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Eigenvalues of one azimuthal sector.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        source: ProfileSource,
        #[arg(long)]
        j: Option<i32>,
        /// Number of eigenvalues reported.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Largest growth rate over a range of sectors.
    Scan {
        #[command(flatten)]
        source: ProfileSource,
        /// Indices such as `1-12` or `2,4,8`.
        #[arg(long = "j-range")]
        j_range: Option<String>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// The 4x4 reduced model at ratio delta.
    Reduced {
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Linearized time evolution in one sector.
    #[command(allow_negative_numbers = true)]
    Evolve {
        #[command(flatten)]
        source: ProfileSource,
        #[arg(long)]
        j: Option<i32>,
        /// Final time.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum)]
        init: Option<InitArg>,
        /// JSON array of `[re, im]` pairs, interleaved `(w1, w2)` per node.
        #[arg(long = "init-file", value_name = "FILE")]
        init_file: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of the trajectory discarded before the fit.
        #[arg(long = "burn-in")]
        burn_in: Option<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match commands::run(cli, &mut stdout).and_then(|()| stdout.flush().map_err(CliError::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Lib(VortexError::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
