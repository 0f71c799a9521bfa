//! Labeled spectrogram collections and the synthetic train/test protocol.
//!
//! The training split holds only normal scenes. The test split alternates
//! normal scenes and independent normal scenes with a random chirp added.

use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::signal::{gen_normal_scene, inject_anomaly, ChirpParams, ChirpRanges, SceneConfig};
use crate::spectrogram::{fit_norm_stats, frame_to_db, normalize_db, NormStats, Spectrogram, DEFAULT_EPSILON, SPEC_PIXELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Abnormal,
    Unlabeled,
}

impl Label {
    pub fn to_byte(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Abnormal => 1,
            Label::Unlabeled => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Label::Normal),
            1 => Some(Label::Abnormal),
            2 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(Label::Normal),
            "abnormal" => Some(Label::Abnormal),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub split: Split,
    pub samples: Vec<Spectrogram>,
    pub labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(split: Split, samples: Vec<Spectrogram>, labels: Vec<Label>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some(first) = samples.first() {
            let eps = first.epsilon();
            if samples.iter().any(|s| s.epsilon() != eps) {
                return Err(Error::invalid("samples disagree on epsilon"));
            }
        }
        Ok(LabeledDataset {
            split,
            samples,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.samples.first().map_or(DEFAULT_EPSILON, Spectrogram::epsilon)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// One row of 4096 pixels per sample.
    pub fn to_matrix(&self) -> Array2<f64> {
        spectrogram_matrix(&self.samples)
    }
}

pub fn spectrogram_matrix(samples: &[Spectrogram]) -> Array2<f64> {
    let mut out = Array2::zeros((samples.len(), SPEC_PIXELS));
    for (mut row, s) in out.rows_mut().into_iter().zip(samples) {
        for (dst, &p) in row.iter_mut().zip(s.pixels()) {
            *dst = p as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    /// Scene ranges; the `seed` field is replaced per sample.
    pub scene: SceneConfig,
    pub chirp: ChirpRanges,
    pub epsilon: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            train_count: 2000,
            test_count: 400,
            scene: SceneConfig::default(),
            chirp: ChirpRanges::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub stats: NormStats,
    /// Chirp injected into each test sample (`None` for normal ones).
    pub chirps: Vec<Option<ChirpParams>>,
}

const TRAIN_STREAM: u64 = 10;
const TEST_STREAM: u64 = 11;
const CHIRP_STREAM: u64 = 12;

/// Label of test sample `i`: even indices normal, odd indices abnormal.
pub fn test_label(i: usize) -> Label {
    if i % 2 == 0 {
        Label::Normal
    } else {
        Label::Abnormal
    }
}

fn scene_for(config: &SynthConfig, stream: u64, index: usize) -> SceneConfig {
    SceneConfig {
        seed: derive_seed(derive_seed(config.seed, stream), index as u64),
        ..config.scene.clone()
    }
}

/// Generate both splits and fit the normalization on the training split.
pub fn synthesize(config: &SynthConfig) -> Result<SynthOutput> {
    synthesize_with_progress(config, |_, _| {})
}

pub fn synthesize_with_progress(config: &SynthConfig, mut progress: impl FnMut(usize, usize)) -> Result<SynthOutput> {
    if config.train_count == 0 || config.test_count == 0 {
        return Err(Error::invalid("train and test counts must be positive"));
    }
    config.scene.validate()?;
    config.chirp.validate()?;
    let total = config.train_count + config.test_count;

    let mut train_db = Vec::with_capacity(config.train_count);
    for i in 0..config.train_count {
        let frame = gen_normal_scene(&scene_for(config, TRAIN_STREAM, i))?;
        train_db.push(frame_to_db(&frame)?);
        progress(i + 1, total);
    }

    let mut test_db = Vec::with_capacity(config.test_count);
    let mut labels = Vec::with_capacity(config.test_count);
    let mut chirps = Vec::with_capacity(config.test_count);
    for i in 0..config.test_count {
        let mut frame = gen_normal_scene(&scene_for(config, TEST_STREAM, i))?;
        let label = test_label(i);
        let chirp = if label == Label::Abnormal {
            let mut rng = seeded(derive_seed(derive_seed(config.seed, CHIRP_STREAM), i as u64));
            let p = config.chirp.sample(config.scene.noise_sigma, &mut rng);
            frame = inject_anomaly(&frame, &p)?;
            Some(p)
        } else {
            None
        };
        test_db.push(frame_to_db(&frame)?);
        labels.push(label);
        chirps.push(chirp);
        progress(config.train_count + i + 1, total);
    }

    let stats = fit_norm_stats(&train_db)?;
    let normalize = |db: &Array2<f64>| normalize_db(db, &stats, config.epsilon);
    let train = LabeledDataset::new(
        Split::Train,
        train_db.iter().map(normalize).collect::<Result<_>>()?,
        vec![Label::Normal; config.train_count],
    )?;
    let test = LabeledDataset::new(
        Split::Test,
        test_db.iter().map(normalize).collect::<Result<_>>()?,
        labels,
    )?;
    Ok(SynthOutput {
        train,
        test,
        stats,
        chirps,
    })
}
