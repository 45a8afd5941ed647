//! The `laeo` command-line harness: synthetic data, geometry corruption,
//! label derivation, gradient checks, training runs, studies and the
//! multi-view detector.

mod commands;
mod output;
pub mod settings;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use laeo::annotate::AnnotateError;
use laeo::losses::LossError;
use laeo::scene::io::DatasetError;
use laeo::scene::SceneError;
use laeo::trainer::TrainError;

/// Exit status for bad arguments, settings or input files.
pub const EXIT_INVALID: i32 = 1;
/// Exit status for numerical failure (non-finite loss, failed gradient check).
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. }
            | TrainError::Loss(LossError::NonFinite { .. })
            | TrainError::Loss(LossError::NonFinitePair { .. }) => CliError::Numerical(e.to_string()),
            e => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::NonFinite { .. } | LossError::NonFinitePair { .. } => CliError::Numerical(e.to_string()),
            e => CliError::Invalid(e.to_string()),
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid(e.to_string())
            }
        }
    )*};
}

invalid_from!(DatasetError, SceneError, AnnotateError, csv::Error, serde_json::Error);

const EXIT_CODES: &str = "Exit codes: 0 success, 1 invalid arguments, settings or input, \
2 numerical failure (non-finite loss or failed gradient check).";

#[derive(Debug, Parser)]
#[command(name = "laeo", version, about = "Mutual-gaze weak supervision experiments", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed for every random draw.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// TOML file of `key = value` settings overriding the command preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LossFlags {
    /// Pseudo-label variant.
    #[arg(long, value_parser = ["weighted", "naive", "confident"])]
    pseudo_mode: Option<String>,
    /// 3D geometric loss variant.
    #[arg(long, value_parser = ["plane", "cosine"])]
    geom3d_mode: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic mutual-gaze scenes (scenes.jsonl).
    #[command(after_help = EXIT_CODES)]
    Synth {
        #[command(flatten)]
        common: Common,
        /// Number of scenes.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Apply a geometry noise model to a scene file.
    #[command(after_help = EXIT_CODES)]
    Corrupt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Relative depth noise.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Derive gaze labels from scene geometry (labels.csv).
    #[command(after_help = EXIT_CODES)]
    Labels {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Finite-difference check of every loss gradient (gradcheck.csv).
    #[command(after_help = EXIT_CODES)]
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Random configurations per loss.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train a predictor (history.csv, summary.json, params.json).
    #[command(after_help = EXIT_CODES)]
    Train {
        #[command(flatten)]
        common: Common,
        /// Scene file to train on; synthetic data when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Synthetic training pairs.
        #[arg(long)]
        n: Option<usize>,
        /// Comma list of geom3d, geom2d, pseudo, sym.
        #[arg(long)]
        losses: Option<String>,
        #[command(flatten)]
        modes: LossFlags,
    },
    /// Compare loss sets over several seeds (ablation.csv).
    #[command(after_help = EXIT_CODES)]
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Loss set to run; repeat for several.
        #[arg(long)]
        losses: Vec<String>,
        #[command(flatten)]
        modes: LossFlags,
    },
    /// Error versus relative depth noise, with and without the 2D loss.
    #[command(after_help = EXIT_CODES)]
    NoiseStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Depth noise levels.
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<f64>,
        #[arg(long)]
        losses: Option<String>,
        #[command(flatten)]
        modes: LossFlags,
    },
    /// Label error as geometric approximations are removed.
    #[command(after_help = EXIT_CODES)]
    LabelStudy {
        #[command(flatten)]
        common: Common,
        /// Number of scenes.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Multi-view mutual-gaze detection on synthetic or given frames.
    #[command(after_help = EXIT_CODES)]
    Detect {
        #[command(flatten)]
        common: Common,
        /// Frame file; synthetic frames when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Synthetic frames.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        min_views: Option<usize>,
        #[arg(long)]
        threshold_deg: Option<f64>,
    },
}

/// Parse `args` (including the program name), run the command and return
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    use commands::*;
    match command {
        Command::Synth { common, n } => synth(&common, n),
        Command::Corrupt { common, input, sigma } => corrupt(&common, &input, sigma),
        Command::Labels { common, input } => labels(&common, &input),
        Command::Gradcheck { common, n } => gradcheck(&common, n),
        Command::Train { common, input, n, losses, modes } => train(&common, input.as_deref(), n, losses, &modes),
        Command::Ablate { common, n, losses, modes } => ablate(&common, n, losses, &modes),
        Command::NoiseStudy { common, n, sigma, losses, modes } => noise_study(&common, n, sigma, losses, &modes),
        Command::LabelStudy { common, n } => label_study(&common, n),
        Command::Detect { common, input, n, min_views, threshold_deg } => {
            detect(&common, input.as_deref(), n, min_views, threshold_deg)
        }
    }
}
