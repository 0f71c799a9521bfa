//! Run configuration as flat `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional and falls back to its default; unknown or repeated keys are
//! rejected.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `seed` | 2024 | master seed for data, training and scoring |
//! | `train_count` | 2000 | normal training scenes |
//! | `test_count` | 400 | test scenes, alternating normal / chirp-injected |
//! | `epochs` | 20 | training epochs (VAE and autoencoder) |
//! | `batch_size` | 32 | mini-batch size |
//! | `learning_rate` | 0.001 | Adam step size |
//! | `latent_samples` | 1 | latent draws per sample per step |
//! | `hidden_widths` | 1024,256,64 | encoder hidden widths (decoder mirrors) |
//! | `latent_dim` | 8 | latent width |
//! | `burst_count_min` / `_max` | 2 / 5 | bursts per scene |
//! | `burst_center_min_hz` / `_max_hz` | -5e6 / 5e6 | burst centers |
//! | `burst_bandwidth_min_hz` / `_max_hz` | 0.5e6 / 3e6 | burst bandwidths |
//! | `burst_duration_min_s` / `_max_s` | 2e-4 / 2e-3 | burst durations |
//! | `burst_snr_min_db` / `_max_db` | 10 / 25 | in-band burst level above noise |
//! | `noise_sigma` | 1 | per-component noise deviation |
//! | `chirp_sweep_min_hz` / `_max_hz` | 1e6 / 10e6 | chirp swept bandwidth |
//! | `chirp_duration_min_frac` / `_max_frac` | 0.2 / 0.8 | chirp duration over frame duration |
//! | `chirp_snr_min_db` / `_max_db` | 5 / 15 | chirp level above noise per frequency pixel |
//! | `epsilon` | 0.001 | spectrogram pixel floor |
//! | `latent_mode` | mean | `mean` or `sample` latent at scoring time |
//! | `noise_floor_percentile` | 20 | percentile used as noise floor |
//! | `detect_autoencoder` | true | train and score the deep autoencoder |
//! | `detect_lof` | true | score with local outlier factor |
//! | `lof_k` | 20 | LOF neighbor count |
//! | `lof_features` | pooled16 | `pooled16` or `raw` |
//! | `out_dir` | out | output directory |

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::lof::{FeatureMode, LofConfig};
use crate::dataset::SynthConfig;
use crate::error::{Error, Result};
use crate::scoring::{LatentMode, DEFAULT_FLOOR_PERCENTILE};
use crate::signal::{ChirpRanges, SceneConfig};
use crate::spectrogram::DEFAULT_EPSILON;
use crate::vae::{LayerPlan, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub latent_samples: usize,
    pub hidden_widths: Vec<usize>,
    pub latent_dim: usize,
    pub scene: SceneConfig,
    pub chirp: ChirpRanges,
    pub epsilon: f64,
    pub latent_mode: LatentMode,
    pub noise_floor_percentile: f64,
    pub detect_autoencoder: bool,
    pub detect_lof: bool,
    pub lof: LofConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plan = LayerPlan::standard();
        RunConfig {
            seed: 2024,
            train_count: 2000,
            test_count: 400,
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.001,
            latent_samples: 1,
            hidden_widths: plan.hidden,
            latent_dim: plan.latent_dim,
            scene: SceneConfig::default(),
            chirp: ChirpRanges::default(),
            epsilon: DEFAULT_EPSILON,
            latent_mode: LatentMode::Mean,
            noise_floor_percentile: DEFAULT_FLOOR_PERCENTILE,
            detect_autoencoder: true,
            detect_lof: true,
            lof: LofConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("config key `{key}`: expected true/false, got `{value}`"))),
    }
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|w| parse_value(key, w.trim())).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::invalid(format!("config key `{key}` given twice")));
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.scene;
        let c = &mut self.chirp;
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "train_count" => self.train_count = parse_value(key, value)?,
            "test_count" => self.test_count = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "latent_samples" => self.latent_samples = parse_value(key, value)?,
            "hidden_widths" => self.hidden_widths = parse_widths(key, value)?,
            "latent_dim" => self.latent_dim = parse_value(key, value)?,
            "burst_count_min" => s.burst_count_range.lo = parse_value(key, value)?,
            "burst_count_max" => s.burst_count_range.hi = parse_value(key, value)?,
            "burst_center_min_hz" => s.burst_center_range.lo = parse_value(key, value)?,
            "burst_center_max_hz" => s.burst_center_range.hi = parse_value(key, value)?,
            "burst_bandwidth_min_hz" => s.burst_bandwidth_range.lo = parse_value(key, value)?,
            "burst_bandwidth_max_hz" => s.burst_bandwidth_range.hi = parse_value(key, value)?,
            "burst_duration_min_s" => s.burst_duration_range.lo = parse_value(key, value)?,
            "burst_duration_max_s" => s.burst_duration_range.hi = parse_value(key, value)?,
            "burst_snr_min_db" => s.burst_snr_range.lo = parse_value(key, value)?,
            "burst_snr_max_db" => s.burst_snr_range.hi = parse_value(key, value)?,
            "noise_sigma" => s.noise_sigma = parse_value(key, value)?,
            "chirp_sweep_min_hz" => c.sweep.lo = parse_value(key, value)?,
            "chirp_sweep_max_hz" => c.sweep.hi = parse_value(key, value)?,
            "chirp_duration_min_frac" => c.duration_frac.lo = parse_value(key, value)?,
            "chirp_duration_max_frac" => c.duration_frac.hi = parse_value(key, value)?,
            "chirp_snr_min_db" => c.snr_db.lo = parse_value(key, value)?,
            "chirp_snr_max_db" => c.snr_db.hi = parse_value(key, value)?,
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "latent_mode" => {
                self.latent_mode = match value {
                    "mean" => LatentMode::Mean,
                    "sample" => LatentMode::Sample,
                    _ => return Err(Error::invalid(format!("latent_mode must be mean or sample, got `{value}`"))),
                }
            }
            "noise_floor_percentile" => self.noise_floor_percentile = parse_value(key, value)?,
            "detect_autoencoder" => self.detect_autoencoder = parse_bool(key, value)?,
            "detect_lof" => self.detect_lof = parse_bool(key, value)?,
            "lof_k" => self.lof.k = parse_value(key, value)?,
            "lof_features" => {
                self.lof.feature_mode = match value {
                    "pooled16" => FeatureMode::Pooled16,
                    "raw" => FeatureMode::RawPixels,
                    _ => return Err(Error::invalid(format!("lof_features must be pooled16 or raw, got `{value}`"))),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::invalid(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_count == 0 || self.test_count == 0 {
            return Err(Error::invalid("train_count and test_count must be positive"));
        }
        if self.test_count < 2 {
            return Err(Error::invalid("test_count must be at least 2 to hold both classes"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        self.train_config().validate()?;
        self.plan().validate()?;
        self.scene.validate()?;
        self.chirp.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 0.1], got {}", self.epsilon)));
        }
        if !(0.0..=100.0).contains(&self.noise_floor_percentile) {
            return Err(Error::invalid("noise_floor_percentile must lie in [0, 100]"));
        }
        if self.detect_lof && (self.lof.k == 0 || self.lof.k >= self.train_count) {
            return Err(Error::invalid(format!(
                "lof_k must satisfy 1 <= k < train_count ({}), got {}",
                self.train_count, self.lof.k
            )));
        }
        Ok(())
    }

    pub fn plan(&self) -> LayerPlan {
        LayerPlan {
            input_dim: crate::spectrogram::SPEC_PIXELS,
            hidden: self.hidden_widths.clone(),
            latent_dim: self.latent_dim,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            train_count: self.train_count,
            test_count: self.test_count,
            scene: self.scene.clone(),
            chirp: self.chirp.clone(),
            epsilon: self.epsilon,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: crate::rng::derive_seed(self.seed, 100),
            latent_samples: self.latent_samples,
            learning_rate: self.learning_rate,
        }
    }

    pub fn autoencoder_train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: crate::rng::derive_seed(self.seed, 101),
            ..self.train_config()
        }
    }

    pub fn scoring_seed(&self) -> u64 {
        crate::rng::derive_seed(self.seed, 102)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let s = &self.scene;
        let c = &self.chirp;
        let widths: Vec<String> = self.hidden_widths.iter().map(|w| w.to_string()).collect();
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("train_count", self.train_count.to_string());
        put("test_count", self.test_count.to_string());
        put("epochs", self.epochs.to_string());
        put("batch_size", self.batch_size.to_string());
        put("learning_rate", self.learning_rate.to_string());
        put("latent_samples", self.latent_samples.to_string());
        put("hidden_widths", widths.join(","));
        put("latent_dim", self.latent_dim.to_string());
        put("burst_count_min", s.burst_count_range.lo.to_string());
        put("burst_count_max", s.burst_count_range.hi.to_string());
        put("burst_center_min_hz", s.burst_center_range.lo.to_string());
        put("burst_center_max_hz", s.burst_center_range.hi.to_string());
        put("burst_bandwidth_min_hz", s.burst_bandwidth_range.lo.to_string());
        put("burst_bandwidth_max_hz", s.burst_bandwidth_range.hi.to_string());
        put("burst_duration_min_s", s.burst_duration_range.lo.to_string());
        put("burst_duration_max_s", s.burst_duration_range.hi.to_string());
        put("burst_snr_min_db", s.burst_snr_range.lo.to_string());
        put("burst_snr_max_db", s.burst_snr_range.hi.to_string());
        put("noise_sigma", s.noise_sigma.to_string());
        put("chirp_sweep_min_hz", c.sweep.lo.to_string());
        put("chirp_sweep_max_hz", c.sweep.hi.to_string());
        put("chirp_duration_min_frac", c.duration_frac.lo.to_string());
        put("chirp_duration_max_frac", c.duration_frac.hi.to_string());
        put("chirp_snr_min_db", c.snr_db.lo.to_string());
        put("chirp_snr_max_db", c.snr_db.hi.to_string());
        put("epsilon", self.epsilon.to_string());
        put(
            "latent_mode",
            match self.latent_mode {
                LatentMode::Mean => "mean".into(),
                LatentMode::Sample => "sample".into(),
            },
        );
        put("noise_floor_percentile", self.noise_floor_percentile.to_string());
        put("detect_autoencoder", self.detect_autoencoder.to_string());
        put("detect_lof", self.detect_lof.to_string());
        put("lof_k", self.lof.k.to_string());
        put(
            "lof_features",
            match self.lof.feature_mode {
                FeatureMode::Pooled16 => "pooled16".into(),
                FeatureMode::RawPixels => "raw".into(),
            },
        );
        put("out_dir", self.out_dir.display().to_string());
        out
    }
}
