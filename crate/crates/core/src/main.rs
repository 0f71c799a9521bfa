use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectrum_anomaly::commands::{
    cmd_eval, cmd_experiment, cmd_score, cmd_synth, cmd_train, MODEL_FILE, SCORES_FILE, TEST_FILE, TRAIN_FILE,
};
use spectrum_anomaly::{Result, RunConfig};

#[derive(Parser)]
#[command(name = "spectrum-anomaly", version, about = "RF spectrogram anomaly detection with a VAE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (flat `key = value` text); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| config.out_dir.clone());
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test spectrogram datasets.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train the VAE on a training dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training dataset; defaults to `<out>/train.spgd`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score a dataset with a trained model.
    Score {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to `<out>/model.vaem`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Dataset to score; defaults to `<out>/test.spgd`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// ROC curves and AUC summary from a scores table.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Scores table; defaults to `<out>/scores.csv`.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Synthesize, train, score and evaluate every detector.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
}

fn or_default(path: &Option<PathBuf>, out: &Path, file: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(file))
}

fn run(cli: Cli) -> Result<()> {
    let mut log = |msg: &str| eprintln!("{msg}");
    match cli.command {
        Command::Synth { common } => {
            let (config, out) = common.load()?;
            let data = cmd_synth(&config, &out, &mut log)?;
            eprintln!(
                "wrote {} training and {} test spectrograms to {}",
                data.train.len(),
                data.test.len(),
                out.display()
            );
        }
        Command::Train { common, data } => {
            let (config, out) = common.load()?;
            let data = or_default(&data, &out, TRAIN_FILE);
            let (_, history) = cmd_train(&config, &data, &out, &mut log)?;
            if let Some(last) = history.last() {
                eprintln!("final loss {:.4}; model in {}", last.total, out.join(MODEL_FILE).display());
            }
        }
        Command::Score { common, model, data } => {
            let (config, out) = common.load()?;
            let model = or_default(&model, &out, MODEL_FILE);
            let data = or_default(&data, &out, TEST_FILE);
            let records = cmd_score(&config, &model, &data, &out)?;
            eprintln!("scored {} samples into {}", records.len(), out.join(SCORES_FILE).display());
        }
        Command::Eval { common, scores } => {
            let (_, out) = common.load()?;
            let scores = or_default(&scores, &out, SCORES_FILE);
            for entry in cmd_eval(&scores, &out)? {
                println!("{}/{}: AUC {:.4}", entry.detector, entry.score_name, entry.roc.auc);
            }
        }
        Command::Experiment { common } => {
            let (config, out) = common.load()?;
            let report = cmd_experiment(&config, &out, &mut log)?;
            for d in &report.detectors {
                println!("{}/{}: AUC {:.4}", d.detector, d.score_name, d.auc());
            }
            if let Some(f) = &report.floor_stats {
                println!(
                    "noise floor elevation: normal {:.4}, abnormal {:.4}, abnormal positive {:.1}%",
                    f.normal_mean_delta,
                    f.abnormal_mean_delta,
                    100.0 * f.abnormal_positive_fraction
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
