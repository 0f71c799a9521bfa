//! Deterministic deep autoencoder with the same layer plan as the VAE but a
//! plain linear bottleneck.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};
use crate::vae::nn::{Activation, Dense, DenseGrad, Stack};
use crate::vae::train::{fit, EpochLoss, TrainConfig, Trainable};
use crate::vae::{LayerPlan, LossBreakdown};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpAutoencoder {
    encoder: Stack,
    decoder: Stack,
}

impl MlpAutoencoder {
    pub fn init(plan: &LayerPlan, seed: u64) -> Result<Self> {
        plan.validate()?;
        let mut rng = seeded(seed);
        let mut encoder = plan.build_encoder(&mut rng);
        encoder.layers.push(Dense::init(
            plan.encoder_out(),
            plan.latent_dim,
            Activation::Identity,
            &mut rng,
        ));
        let decoder = plan.build_decoder(&mut rng);
        Ok(MlpAutoencoder { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.layers[0].input_dim()
    }

    pub fn reconstruct_batch(&self, x: &Array2<f64>) -> Array2<f64> {
        self.decoder.forward(&self.encoder.forward(x))
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has length {}, expected {}",
                x.len(),
                self.input_dim()
            )));
        }
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.reconstruct_batch(&xb).into_raw_vec_and_offset().0)
    }

    /// Reconstruct many rows in fixed-size chunks.
    pub fn reconstruct_all(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for start in (0..x.nrows()).step_by(64) {
            let end = (start + 64).min(x.nrows());
            let batch = x.slice(s![start..end, ..]).to_owned();
            out.slice_mut(s![start..end, ..]).assign(&self.reconstruct_batch(&batch));
        }
        out
    }
}

impl Trainable for MlpAutoencoder {
    fn layers(&self) -> Vec<&Dense> {
        self.encoder.layers.iter().chain(self.decoder.layers.iter()).collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense> {
        self.encoder
            .layers
            .iter_mut()
            .chain(self.decoder.layers.iter_mut())
            .collect()
    }

    fn gradients(&self, batch: &Array2<f64>, _rng: &mut Rng) -> Result<(Vec<DenseGrad>, LossBreakdown)> {
        let n = batch.nrows();
        if n == 0 || batch.ncols() != self.input_dim() {
            return Err(Error::invalid("batch shape does not fit the autoencoder"));
        }
        let scale = 1.0 / n as f64;
        let (code, enc_cache) = self.encoder.forward_cached(batch);
        let (x_hat, dec_cache) = self.decoder.forward_cached(&code);
        let diff = &x_hat - batch;
        let recon = diff.iter().map(|d| d * d).sum::<f64>() * scale;
        if !recon.is_finite() {
            return Err(Error::NumericFailure(format!("non-finite loss {recon}")));
        }
        let (dec_grads, d_code) = self.decoder.backward(&dec_cache, diff * (2.0 * scale), true);
        let (enc_grads, _) = self
            .encoder
            .backward(&enc_cache, d_code.expect("decoder input gradient"), false);
        let grads: Vec<DenseGrad> = enc_grads.into_iter().chain(dec_grads).collect();
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericFailure("non-finite autoencoder gradient".into()));
        }
        Ok((grads, LossBreakdown::new(0.0, recon)))
    }
}

/// Train an autoencoder on the rows of `data` with squared-error loss.
pub fn train_autoencoder(
    data: &Array2<f64>,
    plan: &LayerPlan,
    config: &TrainConfig,
) -> Result<(MlpAutoencoder, Vec<EpochLoss>)> {
    train_autoencoder_with_progress(data, plan, config, |_| {})
}

pub fn train_autoencoder_with_progress(
    data: &Array2<f64>,
    plan: &LayerPlan,
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochLoss),
) -> Result<(MlpAutoencoder, Vec<EpochLoss>)> {
    let mut model = MlpAutoencoder::init(plan, derive_seed(config.seed, 0))?;
    let history = fit(&mut model, data, config, on_epoch)?;
    Ok((model, history))
}

/// Mean squared error between `x` and `x_hat`.
pub fn mse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() || x.is_empty() {
        return Err(Error::invalid(format!(
            "cannot compare {} pixels with {}",
            x.len(),
            x_hat.len()
        )));
    }
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// Mean squared reconstruction error of one input.
pub fn autoencoder_score(model: &MlpAutoencoder, x: &[f64]) -> Result<f64> {
    let x_hat = model.reconstruct(x)?;
    mse(x, &x_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn plan() -> LayerPlan {
        LayerPlan {
            input_dim: 24,
            hidden: vec![12, 6],
            latent_dim: 3,
        }
    }

    #[test]
    fn mse_identities() {
        let x = vec![0.4; 4096];
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let y = vec![0.9; 4096];
        assert!((mse(&x, &y).unwrap() - 0.25).abs() < 1e-15);
        assert!(mse(&x, &y[1..]).is_err());
    }

    #[test]
    fn layout_and_range() {
        let model = MlpAutoencoder::init(&plan(), 3).unwrap();
        assert_eq!(model.layers().len(), 6);
        assert_eq!(model.layers()[2].activation, Activation::Identity);
        let out = model.reconstruct(&[0.5; 24]).unwrap();
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(model.reconstruct(&[0.5; 23]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let model = MlpAutoencoder::init(&plan(), 8).unwrap();
        let mut rng = seeded(1);
        let x = Array2::from_shape_simple_fn((3, 24), || rng.random_range(0.0..1.0));
        let (grads, _) = model.gradients(&x, &mut seeded(0)).unwrap();
        let h = 1e-5;
        for (li, g) in grads.iter().enumerate() {
            for idx in [0usize, g.weights.len() / 2, g.weights.len() - 1] {
                let mut plus = model.clone();
                plus.layers_mut()[li].weights.as_slice_mut().unwrap()[idx] += h;
                let mut minus = model.clone();
                minus.layers_mut()[li].weights.as_slice_mut().unwrap()[idx] -= h;
                let lp = plus.gradients(&x, &mut seeded(0)).unwrap().1.total;
                let lm = minus.gradients(&x, &mut seeded(0)).unwrap().1.total;
                let fd = (lp - lm) / (2.0 * h);
                let an = g.weights.as_slice().unwrap()[idx];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "layer {li} idx {idx}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn training_is_seeded() {
        let mut rng = seeded(4);
        let x = Array2::from_shape_simple_fn((20, 24), || rng.random_range(0.1..0.9));
        let config = TrainConfig {
            epochs: 2,
            batch_size: 6,
            seed: 7,
            ..TrainConfig::default()
        };
        let (a, ha) = train_autoencoder(&x, &plan(), &config).unwrap();
        let (b, hb) = train_autoencoder(&x, &plan(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(ha.iter().all(|e| e.kl == 0.0));
    }
}
