//! End-to-end experiment: synthesize, train, score every detector, build ROC
//! curves and noise-floor statistics.

use std::path::Path;

use ndarray::Array2;

use crate::baselines::autoencoder::{mse, train_autoencoder_with_progress};
use crate::baselines::lof::lof_spectrogram_scores;
use crate::config::RunConfig;
use crate::dataset::{synthesize_with_progress, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::evaluation::roc::{auc_mann_whitney, roc_curve, RocCurve};
use crate::scoring::{noise_floor_at, reconstruct, records_from_reconstruction, ScoreRecord};
use crate::spectrogram::NormStats;
use crate::vae::{train_with_progress, EpochLoss};

pub const HISTOGRAM_BINS: usize = 20;

/// One score of one detector over the whole test set.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorScores {
    pub detector: String,
    pub score_name: String,
    pub scores: Vec<f64>,
    /// Noise floors of input and reconstruction, for reconstruction-based detectors.
    pub floors: Option<Vec<(f64, f64)>>,
    pub roc: RocCurve,
    pub auc_mann_whitney: f64,
}

impl DetectorScores {
    pub fn new(
        detector: &str,
        score_name: &str,
        scores: Vec<f64>,
        floors: Option<Vec<(f64, f64)>>,
        labels: &[Label],
    ) -> Result<Self> {
        let roc = roc_curve(&scores, labels)?;
        let auc_mann_whitney = auc_mann_whitney(&scores, labels)?;
        Ok(DetectorScores {
            detector: detector.to_string(),
            score_name: score_name.to_string(),
            scores,
            floors,
            roc,
            auc_mann_whitney,
        })
    }

    pub fn key(&self) -> String {
        format!("{}_{}", self.detector, self.score_name)
    }

    pub fn auc(&self) -> f64 {
        self.roc.auc
    }
}

/// Noise-floor elevation `floor(x_hat) - floor(x)` summarized per class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorStats {
    pub normal_mean_delta: f64,
    pub abnormal_mean_delta: f64,
    /// Fraction of abnormal samples whose reconstruction floor exceeds the input floor.
    pub abnormal_positive_fraction: f64,
}

impl FloorStats {
    pub fn from_records(records: &[ScoreRecord]) -> Result<Self> {
        let mut normal = Vec::new();
        let mut abnormal = Vec::new();
        for r in records {
            let delta = r.noise_floor_out - r.noise_floor_in;
            match r.label {
                Label::Normal => normal.push(delta),
                Label::Abnormal => abnormal.push(delta),
                Label::Unlabeled => {}
            }
        }
        if normal.is_empty() || abnormal.is_empty() {
            return Err(Error::invalid("floor statistics need both classes"));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let positive = abnormal.iter().filter(|&&d| d > 0.0).count();
        Ok(FloorStats {
            normal_mean_delta: mean(&normal),
            abnormal_mean_delta: mean(&abnormal),
            abnormal_positive_fraction: positive as f64 / abnormal.len() as f64,
        })
    }
}

/// Per-class score counts over equal-width bins spanning the observed range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub normal: Vec<usize>,
    pub abnormal: Vec<usize>,
}

impl Histogram {
    pub fn build(scores: &[f64], labels: &[Label], bins: usize) -> Result<Self> {
        if bins == 0 || scores.len() != labels.len() || scores.is_empty() {
            return Err(Error::invalid("histogram needs bins > 0 and one label per score"));
        }
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut normal = vec![0; bins];
        let mut abnormal = vec![0; bins];
        for (&s, &l) in scores.iter().zip(labels) {
            let bin = (((s - lo) / width) as usize).min(bins - 1);
            match l {
                Label::Abnormal => abnormal[bin] += 1,
                _ => normal[bin] += 1,
            }
        }
        Ok(Histogram {
            edges,
            normal,
            abnormal,
        })
    }
}

/// Results of [`run_experiment`]. Stages fill their fields in order, so a
/// failed run still holds everything computed before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub norm_stats: Option<NormStats>,
    pub train_count: usize,
    pub test_labels: Vec<Label>,
    pub vae_history: Vec<EpochLoss>,
    pub autoencoder_history: Vec<EpochLoss>,
    pub vae_records: Vec<ScoreRecord>,
    pub floor_stats: Option<FloorStats>,
    pub detectors: Vec<DetectorScores>,
}

impl ExperimentReport {
    pub fn new(config: &RunConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            norm_stats: None,
            train_count: 0,
            test_labels: Vec::new(),
            vae_history: Vec::new(),
            autoencoder_history: Vec::new(),
            vae_records: Vec::new(),
            floor_stats: None,
            detectors: Vec::new(),
        }
    }

    pub fn detector(&self, detector: &str, score_name: &str) -> Option<&DetectorScores> {
        self.detectors
            .iter()
            .find(|d| d.detector == detector && d.score_name == score_name)
    }

    pub fn auc(&self, detector: &str, score_name: &str) -> Option<f64> {
        self.detector(detector, score_name).map(DetectorScores::auc)
    }
}

fn row_floors(x: &Array2<f64>, x_hat: &Array2<f64>, percentile: f64) -> Result<Vec<(f64, f64)>> {
    x.rows()
        .into_iter()
        .zip(x_hat.rows())
        .map(|(a, b)| {
            Ok((
                noise_floor_at(&a.to_vec(), percentile)?,
                noise_floor_at(&b.to_vec(), percentile)?,
            ))
        })
        .collect()
}

fn autoencoder_stage(
    config: &RunConfig,
    train_x: &Array2<f64>,
    test: &LabeledDataset,
    test_x: &Array2<f64>,
    report: &mut ExperimentReport,
    log: &mut dyn FnMut(&str),
) -> Result<()> {
    log("training autoencoder");
    let (ae, history) =
        train_autoencoder_with_progress(train_x, &config.plan(), &config.autoencoder_train_config(), |e| {
            log(&format!("  autoencoder epoch {} loss {:.4}", e.epoch, e.total))
        })?;
    report.autoencoder_history = history;
    let x_hat = ae.reconstruct_all(test_x);
    let scores = test_x
        .rows()
        .into_iter()
        .zip(x_hat.rows())
        .map(|(a, b)| mse(&a.to_vec(), &b.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let floors = row_floors(test_x, &x_hat, config.noise_floor_percentile)?;
    report
        .detectors
        .push(DetectorScores::new("autoencoder", "mse", scores, Some(floors), &test.labels)?);
    Ok(())
}

fn run_stages(config: &RunConfig, report: &mut ExperimentReport, log: &mut dyn FnMut(&str)) -> Result<()> {
    config.validate()?;
    log("synthesizing spectrograms");
    let data = synthesize_with_progress(&config.synth_config(), |done, total| {
        if done % 200 == 0 || done == total {
            log(&format!("  {done}/{total} scenes"));
        }
    })?;
    report.norm_stats = Some(data.stats);
    report.train_count = data.train.len();
    report.test_labels = data.test.labels.clone();
    let labels = &data.test.labels;
    let train_x = data.train.to_matrix();
    let test_x = data.test.to_matrix();

    log("training VAE");
    let (vae, history) = train_with_progress(&train_x, &config.plan(), &config.train_config(), |e| {
        log(&format!("  vae epoch {} loss {:.4} (kl {:.4})", e.epoch, e.total, e.kl))
    })?;
    report.vae_history = history;
    let x_hat = reconstruct(&vae, &test_x, config.latent_mode, config.scoring_seed());
    let records = records_from_reconstruction(&data.test, &x_hat, config.noise_floor_percentile)?;
    let floors: Vec<(f64, f64)> = records.iter().map(|r| (r.noise_floor_in, r.noise_floor_out)).collect();
    let na: Vec<f64> = records.iter().map(|r| r.noise_attention).collect();
    let re: Vec<f64> = records.iter().map(|r| r.reconstruction_error).collect();
    report.floor_stats = Some(FloorStats::from_records(&records)?);
    report.vae_records = records;
    report
        .detectors
        .push(DetectorScores::new("vae", "noise_attention", na, Some(floors.clone()), labels)?);
    report
        .detectors
        .push(DetectorScores::new("vae", "reconstruction_error", re, Some(floors), labels)?);

    if config.detect_autoencoder {
        autoencoder_stage(config, &train_x, &data.test, &test_x, report, log)?;
    }
    if config.detect_lof {
        log("scoring local outlier factor");
        let scores = lof_spectrogram_scores(&data.train.samples, &data.test.samples, &config.lof)?;
        report
            .detectors
            .push(DetectorScores::new("lof", "lof", scores, None, labels)?);
    }
    Ok(())
}

/// Run the whole experiment in memory.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    run_experiment_with_log(config, &mut |_| {})
}

pub fn run_experiment_with_log(config: &RunConfig, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config);
    run_stages(config, &mut report, log)?;
    Ok(report)
}

/// Run the experiment and write its report to `dir`. On failure the partial
/// report is still written, together with a `FAILED` marker holding the error.
pub fn run_experiment_to_dir(config: &RunConfig, dir: &Path, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config);
    let outcome = run_stages(config, &mut report, log);
    crate::persistence::report::write_report(dir, &report)?;
    match outcome {
        Ok(()) => {
            crate::persistence::report::clear_failure(dir)?;
            Ok(report)
        }
        Err(e) => {
            crate::persistence::report::write_failure(dir, &e)?;
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: Label, floor_in: f64, floor_out: f64) -> ScoreRecord {
        ScoreRecord {
            sample_id: 0,
            label,
            noise_attention: 0.0,
            reconstruction_error: 0.0,
            noise_floor_in: floor_in,
            noise_floor_out: floor_out,
        }
    }

    #[test]
    fn floor_stats_by_class() {
        let records = vec![
            record(Label::Normal, 0.2, 0.2),
            record(Label::Normal, 0.2, 0.3),
            record(Label::Abnormal, 0.2, 0.5),
            record(Label::Abnormal, 0.4, 0.3),
        ];
        let stats = FloorStats::from_records(&records).unwrap();
        assert!((stats.normal_mean_delta - 0.05).abs() < 1e-12);
        assert!((stats.abnormal_mean_delta - 0.1).abs() < 1e-12);
        assert_eq!(stats.abnormal_positive_fraction, 0.5);
        assert!(FloorStats::from_records(&records[..2]).is_err());
    }

    #[test]
    fn histogram_counts_every_sample() {
        let scores = [0.0, 0.5, 1.0, 1.0, 0.25];
        let labels = [Label::Normal, Label::Abnormal, Label::Abnormal, Label::Normal, Label::Normal];
        let h = Histogram::build(&scores, &labels, 4).unwrap();
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.normal.iter().sum::<usize>(), 3);
        assert_eq!(h.abnormal.iter().sum::<usize>(), 2);
        assert_eq!(h.normal[3] + h.abnormal[3], 2);
    }

    #[test]
    fn constant_scores_fill_first_bin() {
        let h = Histogram::build(&[2.0, 2.0], &[Label::Normal, Label::Abnormal], 3).unwrap();
        assert_eq!(h.normal, vec![1, 0, 0]);
        assert_eq!(h.abnormal, vec![1, 0, 0]);
    }
}
