//! Command-line front end: configuration parsing, CSV output and the
//! subcommands behind the `wedgeflow` binary.

pub mod commands;
pub mod config;
pub mod csv;
pub mod exit;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use exit::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "wedgeflow",
    version,
    about = "Stationary densities of reflected Brownian motion in a wedge"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct the density: terms.csv and grid.csv.
    Density(Common),
    /// Run every check on the constructed density: report.txt.
    Validate(Common),
    /// Simulate the reflected process: histogram.csv and comparison.txt.
    Simulate(Common),
    /// Monte Carlo survival of free Brownian motion against the group formula.
    Survival(Common),
    /// Stationary mass below x against the survival probability from -x.
    Duality(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Density(c)
            | Command::Validate(c)
            | Command::Simulate(c)
            | Command::Survival(c)
            | Command::Duality(c) => c,
        }
    }
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Runs one command and returns its printed text and exit code.
pub fn run(cmd: &Command) -> Result<commands::Outcome, CliError> {
    let common = cmd.common();
    let cfg = load_config(&common.config, common.seed)?;
    let out = common.out.as_path();
    match cmd {
        Command::Density(_) => commands::density(&cfg, out),
        Command::Validate(_) => commands::validate_cmd(&cfg, out),
        Command::Simulate(_) => commands::simulate(&cfg, out),
        Command::Survival(_) => commands::survival(&cfg, out),
        Command::Duality(_) => commands::duality(&cfg, out),
    }
}
