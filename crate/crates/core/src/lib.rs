//! Unsupervised anomaly detection for wideband RF spectrograms.
//!
//! Synthetic IQ scenes of noise and bandlimited bursts are turned into
//! normalized 64x64 log-magnitude spectrograms. A fully-connected variational
//! autoencoder trained on normal scenes reconstructs each test spectrogram,
//! and the noise attention score `sum |x - x_hat| / x` flags scenes with an
//! injected chirp. A deep autoencoder and local outlier factor serve as
//! reference detectors, and ROC analysis compares them.

pub mod baselines;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod persistence;
pub mod rng;
pub mod scoring;
pub mod signal;
pub mod spectrogram;
pub mod vae;

pub use config::RunConfig;
pub use dataset::{Label, LabeledDataset, SynthConfig, SynthOutput};
pub use error::{Error, Result};
pub use evaluation::{auc_mann_whitney, roc_curve, run_experiment, ExperimentReport, RocCurve};
pub use scoring::{noise_attention, reconstruction_error, LatentMode, ScoreRecord};
pub use signal::{ChirpParams, ChirpRanges, IqFrame, SceneConfig};
pub use spectrogram::{NormStats, Spectrogram};
pub use vae::{LayerPlan, MlpVae, TrainConfig};
