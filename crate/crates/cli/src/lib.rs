//! The `ecodispatch` command line: trace generation and preprocessing,
//! training and evaluation of one agent, the experiment harness and the
//! gradient check.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ecodispatch::harness::AgentKind;
use ecodispatch::traces::Preset;

pub use config::{load_config, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or config; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// The run itself failed; exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ecodispatch", version, about = "Green-energy battery dispatch: simulate, train, compare")]
pub struct Cli {
    /// Random seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic trace CSV.
    GenTraces {
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 7)]
        days: usize,
    },
    /// Clean, aggregate, align and normalize a trace CSV.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        /// Aggregation interval.
        #[arg(long, default_value_t = 15)]
        interval_minutes: i64,
    },
    /// Train one agent and save it.
    Train(AgentArgs),
    /// Run one greedy evaluation episode and write its log and metrics.
    Evaluate {
        #[command(flatten)]
        agent: AgentArgs,
        /// Saved policy or Q table; defaults to the one `train` writes.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Compare the agent roster across presets and seeds.
    Compare,
    /// Full system against each single-flag ablation.
    Ablate,
    /// Vary one hyperparameter.
    Sweep {
        /// recurrent_units, conv_filters, minibatch or learning_rate.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Check analytic gradients against finite differences.
    GradCheck,
}

#[derive(Debug, Clone, Args)]
pub struct AgentArgs {
    #[arg(long)]
    pub agent: Option<AgentKind>,
    #[arg(long, conflicts_with = "scenario")]
    pub preset: Option<Preset>,
    /// Scenario spec file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// PPO updates (overrides the config file).
    #[arg(long)]
    pub updates: Option<usize>,
}

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn dispatch_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.experiment.seeds = vec![seed];
        cfg.experiment.ablation_seeds.clear();
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    commands::execute(cli.command, cfg)
}
