//! The `switchtab` command line: config and checkpoint files, and one
//! function per command.

mod checkpoint;
mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use commands::{cmd_embed, cmd_eval, cmd_finetune, cmd_gradcheck, cmd_pretrain, cmd_project, cmd_synth};
pub use config::{EvalSettings, ModelSettings, Overrides, RunConfig};

use crate::data::DataError;
use crate::eval::EvalError;
use crate::model::ModelError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema does not match the checkpoint (expected hash {expected}, found {found})")]
    SchemaMismatch { expected: String, found: String },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
    #[error("gradient check failed: max relative error {0:e}")]
    GradCheckFailed(f64),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn checkpoint(path: &Path, reason: impl ToString) -> Self {
        CliError::Checkpoint {
            path: path.display().to_string(),
            reason: reason.to_string(),
        }
    }

    /// 0 ok, 1 usage or data, 2 schema mismatch, 3 unreadable checkpoint.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SchemaMismatch { .. } => 2,
            CliError::Checkpoint { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Synth,
    Pretrain,
    Finetune,
    Embed,
    Eval,
    Project,
    Gradcheck,
}

#[derive(Debug, Parser)]
#[command(name = "switchtab", version, about = "Tabular representation learning with mutual/salient decoupling")]
pub struct Args {
    pub command: Command,
    /// Run config JSON. Without it every setting takes its default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train without decoding switched pairs.
    #[arg(long)]
    pub no_switch: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Corruption ratio.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Args {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply(&Overrides {
            seed: self.seed,
            no_switch: self.no_switch,
            alpha: self.alpha,
            ratio: self.ratio,
            out: self.out.clone(),
        });
        config.validate()?;
        Ok(config)
    }
}

/// Runs one command, writing its report to `stdout`.
pub fn run(args: &Args, stdout: &mut dyn Write) -> Result<()> {
    let config = args.run_config()?;
    match args.command {
        Command::Synth => cmd_synth(&config, stdout),
        Command::Pretrain => cmd_pretrain(&config, stdout),
        Command::Finetune => cmd_finetune(&config, stdout),
        Command::Embed => cmd_embed(&config, stdout),
        Command::Eval => cmd_eval(&config, stdout),
        Command::Project => cmd_project(&config, stdout),
        Command::Gradcheck => cmd_gradcheck(&config, stdout),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(&args, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
