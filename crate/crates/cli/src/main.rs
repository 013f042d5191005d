//! `fairattn`: batch experiments for the fair tabular transformer.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairattn::ErrorKind;

#[derive(Parser)]
#[command(name = "fairattn", version, about = "Fair tabular learning with counterfactual attention regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and its schema.
    Synth(commands::SynthArgs),
    /// Train a model and write it as JSON.
    Train(commands::TrainArgs),
    /// Performance report of a trained model.
    Eval(commands::EvalArgs),
    /// Counterfactual fairness report of a trained model.
    Audit(commands::EvalArgs),
    /// Export mean attention matrices and the feature significance profile.
    Attention(commands::AttentionArgs),
    /// Train one model per λ and tabulate fairness on a held-out split.
    Sweep(commands::SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Classification,
    Regression,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(fairattn::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<fairattn::Error> for CliError {
    fn from(e: fairattn::Error) -> Self {
        CliError::Lib(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Audit(a) => commands::audit(a),
        Command::Attention(a) => commands::attention(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairattn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
