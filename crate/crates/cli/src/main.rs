//! `gaze-affect`: deterministic, file-based pipeline from raw gaze
//! recordings (or the synthetic stand-in corpus) to trained emotion
//! classifiers and evaluation reports.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaze_affect::error::ErrorKind;
use gaze_affect::features::TargetLabel;
use manifest::PipelineManifest;

#[derive(Parser)]
#[command(
    name = "gaze-affect",
    about = "Personality-aware multimodal emotion recognition from eye tracking",
    version
)]
struct Cli {
    /// Manifest JSON file with paths, configs, and the global seed.
    #[arg(long, global = true, default_value = "manifest.json")]
    manifest: PathBuf,

    /// Override the manifest's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the manifest's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset (gaze CSV, session JSON, landmark
    /// JSON, ratings CSV).
    Synth,
    /// Extract per-trial features into features.csv, printing the
    /// quality-filter drop log.
    Features,
    /// Train one model for a target label and feature set; writes a
    /// checkpoint and a results row evaluated on the test split.
    Train {
        /// perceived_valence | perceived_arousal | felt_valence | felt_arousal
        #[arg(long)]
        target: String,
        /// eye | eye-no-env | eye+personality | eye+stimulus | eye+personality+stimulus
        #[arg(long, default_value = "eye+personality+stimulus")]
        feature_set: String,
    },
    /// Train the linear SVM baseline on static features.
    Svm {
        #[arg(long)]
        target: String,
        /// Add the personality traits to the stimulus one-hot input.
        #[arg(long)]
        with_personality: bool,
        /// L2 regularization strength. Values near 1 over-shrink the
        /// weights relative to the unit-norm one-hot features.
        #[arg(long, default_value_t = 0.01)]
        reg: f64,
    },
    /// Hyperparameter grid search; writes the results table sorted by
    /// validation macro F1.
    Gridsearch {
        #[arg(long)]
        target: String,
    },
    /// Evaluate a checkpoint on a split and write the report JSON.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// train | val | test | all
        #[arg(long, default_value = "test")]
        split: String,
    },
}

fn run(cli: Cli) -> gaze_affect::Result<()> {
    let mut manifest = if cli.manifest.exists() {
        PipelineManifest::load(&cli.manifest)?
    } else {
        PipelineManifest::default()
    };
    if let Some(seed) = cli.seed {
        manifest.seed = seed;
    }
    if let Some(out) = cli.out {
        manifest.paths.out = out;
    }

    match cli.command {
        Command::Synth => commands::cmd_synth(&manifest),
        Command::Features => commands::cmd_features(&manifest),
        Command::Train {
            target,
            feature_set,
        } => commands::cmd_train(&manifest, TargetLabel::parse(&target)?, &feature_set),
        Command::Svm {
            target,
            with_personality,
            reg,
        } => commands::cmd_svm(&manifest, TargetLabel::parse(&target)?, with_personality, reg),
        Command::Gridsearch { target } => {
            commands::cmd_gridsearch(&manifest, TargetLabel::parse(&target)?)
        }
        Command::Eval { checkpoint, split } => commands::cmd_eval(&manifest, &checkpoint, &split),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numeric => 3,
                ErrorKind::Io => 4,
            };
            ExitCode::from(code)
        }
    }
}
