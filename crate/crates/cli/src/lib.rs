//! Command-line front end: synthetic data, preprocessing, training, search
//! and evaluation.

pub mod checkpoint;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use hyperfuse::signals::Target;

pub use checkpoint::{Checkpoint, CheckpointError, Metadata};
pub use commands::{format_pm, Report, RunSummary};
pub use config::{ConfigError, RunConfigFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Caller mistake that is not a library error: missing flag, bad path,
/// incompatible checkpoint.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

#[derive(Debug, Parser)]
#[command(name = "hyperfuse", version, about = "Hypercomplex multimodal emotion recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, resample and segment a raw dataset.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic raw dataset.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Amplitude ratio between consecutive classes.
        #[arg(long)]
        separability: Option<f64>,
    },
    /// Train and test `runs` models on a processed dataset.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        target: Option<Target>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        /// Checkpoint path; with several runs each gets a `.runN` suffix.
        #[arg(long)]
        out: PathBuf,
        /// JSON report path (default: checkpoint path with `.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Random search over the maximum learning rate.
    Search {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        target: Option<Target>,
    },
    /// Score a checkpoint. Uses the stored test split when the dataset is
    /// the one it was trained on, unless `--all` is given.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: Option<Target>,
        #[arg(long)]
        all: bool,
        /// Also write the metrics as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Exit code for a failed command: 2 for bad input or configuration,
/// 1 for anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hyperfuse::Error>() {
            return if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL };
        }
        if cause.is::<InputError>()
            || cause.is::<ConfigError>()
            || cause.is::<CheckpointError>()
            || cause.is::<std::io::Error>()
        {
            return EXIT_INPUT;
        }
    }
    EXIT_INTERNAL
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
