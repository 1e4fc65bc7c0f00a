//! `graphnav` command-line driver.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphnav::harness::{EvalMode, HarnessError};

#[derive(Parser, Debug)]
#[command(name = "graphnav", version, about = "Object search on pose/landmark graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML experiment config (sections env, embeddings, pretrain, train, eval).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set train.n_episodes=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Root seed (same as `--set seed=N`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the training maps and spawn models.
    GenEnv(Common),
    /// Proxy pre-training; writes `pretrained.ckpt`.
    Pretrain(Common),
    /// Train one agent per (spawn model, agent) pair.
    Train {
        #[command(flatten)]
        common: Common,
        /// Start every agent from this checkpoint instead of a random init.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Evaluate trained agents against the baselines.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        agents: PathBuf,
        /// Overrides `eval.mode`.
        #[arg(long)]
        mode: Option<EvalMode>,
    },
    /// Evaluate the random and oracle policies only.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<EvalMode>,
    },
    /// Aggregate a records CSV into metrics and plot data.
    Report {
        /// Records CSV written by `eval` or `baseline`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

/// Exit status 1 for bad configuration, 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenEnv(c) => commands::gen_env(&c),
        Command::Pretrain(c) => commands::pretrain(&c),
        Command::Train { common, init } => commands::train(&common, init.as_deref()),
        Command::Eval { common, agents, mode } => commands::eval(&common, Some(&agents), mode),
        Command::Baseline { common, mode } => commands::eval(&common, None, mode),
        Command::Report { records, out } => commands::report(&records, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
