//! Anomaly scores computed from a spectrogram and its reconstruction.
//!
//! The noise attention score divides each pixel's absolute reconstruction
//! error by the input pixel, so errors in low-amplitude (noise) regions weigh
//! more than errors on strong signals. The reconstruction error score is the
//! plain sum of absolute errors.

use ndarray::{s, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::spectrogram::{Spectrogram, SPEC_PIXELS};
use crate::vae::MlpVae;

pub const DEFAULT_FLOOR_PERCENTILE: f64 = 20.0;
const SCORE_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentMode {
    /// Decode the posterior mean.
    Mean,
    /// Decode one seeded posterior draw.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub sample_id: usize,
    pub label: Label,
    pub noise_attention: f64,
    pub reconstruction_error: f64,
    pub noise_floor_in: f64,
    pub noise_floor_out: f64,
}

fn check_pair(x: &[f64], x_hat: &[f64]) -> Result<()> {
    if x.len() != x_hat.len() {
        return Err(Error::invalid(format!(
            "input has {} pixels, reconstruction has {}",
            x.len(),
            x_hat.len()
        )));
    }
    Ok(())
}

/// `sum_i |x_i - x_hat_i| / x_i`, requiring every `x_i >= epsilon`.
pub fn noise_attention(x: &[f64], x_hat: &[f64], epsilon: f64) -> Result<f64> {
    check_pair(x, x_hat)?;
    let mut total = 0.0;
    for (i, (&a, &b)) in x.iter().zip(x_hat).enumerate() {
        if !(a >= epsilon) {
            return Err(Error::ContractViolation(format!(
                "pixel {i} = {a} is below the floor {epsilon}"
            )));
        }
        total += (a - b).abs() / a;
    }
    Ok(total)
}

/// `sum_i |x_i - x_hat_i|`.
pub fn reconstruction_error(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_pair(x, x_hat)?;
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b).abs()).sum())
}

pub fn noise_attention_score(x: &Spectrogram, x_hat: &[f64]) -> Result<f64> {
    noise_attention(&x.to_f64(), x_hat, x.epsilon())
}

pub fn reconstruction_error_score(x: &Spectrogram, x_hat: &[f64]) -> Result<f64> {
    reconstruction_error(&x.to_f64(), x_hat)
}

/// Nearest-rank percentile (`ceil(p/100 * n)`-th smallest value).
pub fn nearest_rank_percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Noise floor of a 64x64 image: its 20th-percentile pixel.
pub fn noise_floor_estimate(img: &[f64]) -> Result<f64> {
    noise_floor_at(img, DEFAULT_FLOOR_PERCENTILE)
}

pub fn noise_floor_at(img: &[f64], percentile: f64) -> Result<f64> {
    if img.len() != SPEC_PIXELS {
        return Err(Error::invalid(format!(
            "noise floor needs {SPEC_PIXELS} pixels, got {}",
            img.len()
        )));
    }
    if img.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite pixels"));
    }
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::invalid(format!("percentile {percentile} outside [0, 100]")));
    }
    Ok(nearest_rank_percentile(img, percentile))
}

/// Reconstructions of every sample, one row each.
pub fn reconstruct(model: &MlpVae, data: &Array2<f64>, mode: LatentMode, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    let mut out = Array2::zeros(data.raw_dim());
    for start in (0..data.nrows()).step_by(SCORE_BATCH) {
        let end = (start + SCORE_BATCH).min(data.nrows());
        let batch = data.slice(s![start..end, ..]).to_owned();
        let (mu, sigma) = model.encode_batch(&batch);
        let z = match mode {
            LatentMode::Mean => mu,
            LatentMode::Sample => {
                let eps = Array2::from_shape_simple_fn(mu.raw_dim(), || -> f64 { StandardNormal.sample(&mut rng) });
                &mu + &(&sigma * &eps)
            }
        };
        out.slice_mut(s![start..end, ..]).assign(&model.decode_batch(&z));
    }
    out
}

/// Score every sample of `data` with both scores and both noise floors.
pub fn score_dataset(model: &MlpVae, data: &LabeledDataset, mode: LatentMode, seed: u64) -> Result<Vec<ScoreRecord>> {
    score_dataset_with_floor(model, data, mode, seed, DEFAULT_FLOOR_PERCENTILE)
}

pub fn score_dataset_with_floor(
    model: &MlpVae,
    data: &LabeledDataset,
    mode: LatentMode,
    seed: u64,
    floor_percentile: f64,
) -> Result<Vec<ScoreRecord>> {
    if model.input_dim() != SPEC_PIXELS {
        return Err(Error::invalid(format!(
            "model expects {} inputs, spectrograms have {SPEC_PIXELS}",
            model.input_dim()
        )));
    }
    let x = data.to_matrix();
    let x_hat = reconstruct(model, &x, mode, seed);
    records_from_reconstruction(data, &x_hat, floor_percentile)
}

/// Build score records from precomputed reconstructions (one row per sample).
pub fn records_from_reconstruction(
    data: &LabeledDataset,
    x_hat: &Array2<f64>,
    floor_percentile: f64,
) -> Result<Vec<ScoreRecord>> {
    if x_hat.nrows() != data.len() {
        return Err(Error::invalid("one reconstruction per sample required"));
    }
    data.samples
        .iter()
        .zip(&data.labels)
        .zip(x_hat.axis_iter(Axis(0)))
        .enumerate()
        .map(|(i, ((spec, &label), row))| {
            let recon = row.to_vec();
            let input = spec.to_f64();
            Ok(ScoreRecord {
                sample_id: i,
                label,
                noise_attention: noise_attention(&input, &recon, spec.epsilon())?,
                reconstruction_error: reconstruction_error(&input, &recon)?,
                noise_floor_in: noise_floor_at(&input, floor_percentile)?,
                noise_floor_out: noise_floor_at(&recon, floor_percentile)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_reconstruction_scores_zero() {
        let x = vec![0.3; SPEC_PIXELS];
        assert_eq!(noise_attention(&x, &x, 1e-3).unwrap(), 0.0);
        assert_eq!(reconstruction_error(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn uniform_offsets() {
        let x = vec![0.5; SPEC_PIXELS];
        let x_hat = vec![0.75; SPEC_PIXELS];
        assert_eq!(noise_attention(&x, &x_hat, 1e-3).unwrap(), 2048.0);
        assert_eq!(reconstruction_error(&x, &x_hat).unwrap(), 1024.0);
    }

    #[test]
    fn spectrogram_entry_points() {
        let spec = Spectrogram::from_pixels(vec![0.5; SPEC_PIXELS], 1e-3).unwrap();
        let x_hat = vec![0.25; SPEC_PIXELS];
        assert_eq!(noise_attention_score(&spec, &x_hat).unwrap(), 2048.0);
        assert_eq!(reconstruction_error_score(&spec, &x_hat).unwrap(), 1024.0);
        assert!(noise_attention_score(&spec, &x_hat[1..]).is_err());
    }

    #[test]
    fn shape_and_floor_contracts() {
        let x = vec![0.5; 10];
        assert!(matches!(
            noise_attention(&x, &[0.5; 9], 1e-3),
            Err(Error::InvalidArgument(_))
        ));
        let mut low = x.clone();
        low[4] = 1e-4;
        assert!(matches!(
            noise_attention(&low, &x, 1e-3),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn floor_of_constant_image() {
        assert_eq!(noise_floor_estimate(&vec![0.37; SPEC_PIXELS]).unwrap(), 0.37);
    }

    #[test]
    fn floor_ignores_bright_minority() {
        let img: Vec<f64> = (0..SPEC_PIXELS)
            .map(|i| if i % 10 == 0 { 1.0 } else { 0.1 })
            .collect();
        assert_eq!(noise_floor_estimate(&img).unwrap(), 0.1);
    }

    #[test]
    fn floor_rejects_bad_shape() {
        assert!(noise_floor_estimate(&[0.1; 100]).is_err());
    }

    #[test]
    fn nearest_rank_definition() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(nearest_rank_percentile(&v, 20.0), 2.0);
        assert_eq!(nearest_rank_percentile(&v, 0.0), 1.0);
        assert_eq!(nearest_rank_percentile(&v, 100.0), 10.0);
        assert_eq!(nearest_rank_percentile(&v, 21.0), 3.0);
    }
}
