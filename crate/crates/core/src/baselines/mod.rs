//! Reference detectors: deep autoencoder and local outlier factor.

pub mod autoencoder;
pub mod lof;

pub use autoencoder::{autoencoder_score, mse, train_autoencoder, MlpAutoencoder};
pub use lof::{lof_scores, lof_spectrogram_scores, FeatureMode, LofConfig, LofModel};
