//! `rdoa`: snapshot synthesis, shape estimation + MUSIC, bound evaluation,
//! and Monte Carlo sweeps, driven by a sectioned key = value config file.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Errors carry their exit class: 2 config/validation, 3 I/O, 4 numerical.
/// Usage errors from the argument parser also exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<rdoa_core::Error> for CliError {
    fn from(e: rdoa_core::Error) -> Self {
        use rdoa_core::Error as E;
        match e {
            E::Dimension(_) | E::Domain(_) | E::Degenerate(_) | E::Parse(_) => {
                CliError::Config(e.to_string())
            }
            E::Io(_) => CliError::Io(e.to_string()),
            E::NotPositiveDefinite(_) | E::Singular(_) | E::NonConvergence(_) | E::Numerical(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rdoa",
    version,
    about = "Robust direction-of-arrival estimation under elliptical noise"
)]
pub struct Cli {
    /// Config file with [scene] plus [data] (sample) or [experiment]
    /// (bound, simulate) sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output path; each subcommand has a default when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overrides the config's seed (sample) or master_seed (simulate).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Worker threads for the Monte Carlo sweep; 0 uses all cores.
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,

    /// With simulate: also write an SVG figure next to the result CSV.
    #[arg(long, global = true)]
    pub plot: bool,

    /// Adds diagnostic columns to result CSVs.
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Draw snapshots from the configured scene and noise family, writing
    /// a snapshot CSV plus a metadata sidecar (default out: snapshots.csv).
    Sample,
    /// Run shape estimators and MUSIC on a snapshot CSV, one result row
    /// per estimator on standard output.
    Estimate {
        /// Snapshot CSV in the `sample` output format.
        file: PathBuf,
        /// Number of sources to resolve.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Estimator to run: scm, tyler, r, or all.
        #[arg(long, default_value = "all")]
        estimator: String,
        /// MUSIC search grid density.
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Evaluate the semiparametric bound over the configured sweep,
    /// one CSV row per sweep value (standard output unless --out).
    Bound,
    /// Run the Monte Carlo sweep: MSE index per estimator per sweep point
    /// plus the bound (default out: results.csv).
    Simulate,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("rdoa: {e}");
        std::process::exit(e.code());
    }
}
