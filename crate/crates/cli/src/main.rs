//! Command-line harness around the simulation engine.
//!
//! Subcommands: `simulate | sweep | hafnian | sample | channels`.
//! Exit codes: 0 ok, 2 config error, 3 I/O error, 4 resource guard,
//! 1 anything else.

mod commands;
mod config;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opagbs_core::LogBase;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Guard(String),
    Other(String),
}

impl CliError {
    pub fn config(m: impl Into<String>) -> Self {
        CliError::Config(m.into())
    }
    pub fn io(m: impl Into<String>) -> Self {
        CliError::Io(m.into())
    }
    pub fn guard(m: impl Into<String>) -> Self {
        CliError::Guard(m.into())
    }
    pub fn other(m: impl Into<String>) -> Self {
        CliError::Other(m.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Guard(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Guard(m) => write!(f, "resource guard: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

/// Network parameters; flags override the `[network]` section of --config.
#[derive(Debug, Args, Default, Clone)]
pub struct NetworkArgs {
    /// Mode count (even)
    #[arg(long)]
    n: Option<usize>,
    /// Depth in amplifier layers
    #[arg(long)]
    d: Option<usize>,
    /// Uniform squeezing magnitude
    #[arg(long)]
    r: Option<f64>,
    /// Uniform squeezing angle (radians, default 0)
    #[arg(long)]
    theta: Option<f64>,
    /// Uniform beam-splitter amplitude transmittance (default 1)
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Parser, Debug)]
#[command(
    name = "opagbs",
    version,
    about = "Amplifier-network boson-sampling simulator: covariance propagation, \
             entanglement sweeps, and hafnian photon statistics"
)]
struct Cli {
    /// INI config file with [network], [sweep], [output] sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file path (overrides [output] path)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for sweeps (default: logical cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// RNG seed for sampling (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Logarithm base for negativities: 2 (bits) or e (nats)
    #[arg(long, global = true, default_value = "2", value_parser = ["2", "e"])]
    log_base: String,
    /// Evaluate the operator-moment engine alongside the channel engine
    #[arg(long, global = true)]
    both_engines: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one network: covariance CSV plus a negativity report
    Simulate {
        #[command(flatten)]
        network: NetworkArgs,
        /// Partition list, e.g. "(4,4),(5,3)", "equal", "interleaved"
        #[arg(long)]
        partitions: Option<String>,
    },
    /// Run the parameter grid from the [sweep] section to CSV
    Sweep,
    /// Hafnian of a symmetric matrix read from CSV
    Hafnian {
        /// Matrix file, one comma-separated row per line
        matrix: PathBuf,
        /// brute (<= 12x12) or fast (<= 40x40)
        #[arg(long, default_value = "fast", value_parser = ["brute", "fast"])]
        algorithm: String,
    },
    /// Enumerate the photon-pattern distribution and draw samples
    Sample {
        #[command(flatten)]
        network: NetworkArgs,
        /// Number of samples to draw
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Photon budget for the enumerated support (<= 8)
        #[arg(long, default_value_t = 8)]
        max_total: u32,
    },
    /// Channel-ordering demos: loss-loss, bs-loss, sq-loss, bloch-messiah
    Channels {
        #[arg(long)]
        demo: String,
        /// Squeezing parameter for sq-loss and bloch-messiah
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Transmissivity of the loss element
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        /// Second transmissivity for loss-loss
        #[arg(long, default_value_t = 0.9)]
        eta2: f64,
        /// Beam-splitter angle for bs-loss (radians)
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        theta: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let raw = match &cli.config {
        Some(path) => Some(config::RawConfig::load(path)?),
        None => None,
    };
    let base = if cli.log_base == "e" { LogBase::Natural } else { LogBase::Two };

    match &cli.cmd {
        Command::Simulate { network, partitions } => commands::cmd_simulate(
            raw.as_ref(),
            network,
            partitions.as_deref(),
            cli.output.as_deref(),
            base,
            cli.both_engines,
        ),
        Command::Sweep => {
            let raw = raw.as_ref().ok_or_else(|| {
                CliError::config("sweep requires --config with a [sweep] section".to_string())
            })?;
            commands::cmd_sweep(raw, cli.output.as_deref(), base, cli.both_engines, cli.jobs)
        }
        Command::Hafnian { matrix, algorithm } => commands::cmd_hafnian(matrix, algorithm),
        Command::Sample { network, count, max_total } => commands::cmd_sample(
            raw.as_ref(),
            network,
            *count,
            *max_total,
            cli.seed.unwrap_or(0),
            cli.output.as_deref(),
        ),
        Command::Channels { demo, r, eta, eta2, theta } => {
            commands::cmd_channels(demo, *r, *eta, *eta2, *theta)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("opagbs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
