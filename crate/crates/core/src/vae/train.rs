//! Mini-batch Adam training shared by the VAE and the autoencoder baseline.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};
use crate::vae::adam::{adam_step, AdamState, DEFAULT_ALPHA};
use crate::vae::model::{backward, LayerPlan, LossBreakdown, MlpVae};
use crate::vae::nn::{Dense, DenseGrad};

/// A model trainable by [`fit`].
pub trait Trainable {
    fn layers(&self) -> Vec<&Dense>;
    fn layers_mut(&mut self) -> Vec<&mut Dense>;
    /// Batch-mean loss and gradients in [`Trainable::layers`] order.
    fn gradients(&self, batch: &Array2<f64>, rng: &mut Rng) -> Result<(Vec<DenseGrad>, LossBreakdown)>;
}

impl Trainable for MlpVae {
    fn layers(&self) -> Vec<&Dense> {
        MlpVae::layers(self)
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense> {
        MlpVae::layers_mut(self)
    }

    fn gradients(&self, batch: &Array2<f64>, rng: &mut Rng) -> Result<(Vec<DenseGrad>, LossBreakdown)> {
        backward(self, batch, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Latent draws per sample per step.
    pub latent_samples: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            seed: 0,
            latent_samples: 1,
            learning_rate: DEFAULT_ALPHA,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.latent_samples == 0 {
            return Err(Error::invalid("batch size and latent samples must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Sample-weighted mean loss over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub kl: f64,
    pub recon: f64,
}

fn check_data(data: &Array2<f64>, width: usize) -> Result<()> {
    if data.nrows() == 0 {
        return Err(Error::invalid("training set is empty"));
    }
    if data.ncols() != width {
        return Err(Error::invalid(format!(
            "training rows have {} values, model expects {width}",
            data.ncols()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(())
}

/// Train `model` in place. Each epoch reshuffles the rows with a generator
/// derived from `config.seed`.
pub fn fit<M: Trainable>(
    model: &mut M,
    data: &Array2<f64>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<Vec<EpochLoss>> {
    config.validate()?;
    let width = model.layers().first().map(|l| l.input_dim()).unwrap_or(0);
    check_data(data, width)?;

    let sizes: Vec<usize> = model
        .layers()
        .iter()
        .flat_map(|l| [l.weights.len(), l.bias.len()])
        .collect();
    let mut adam = AdamState::with_alpha(&sizes, config.learning_rate);
    let mut shuffle_rng = seeded(derive_seed(config.seed, 1));
    let mut latent_rng = seeded(derive_seed(config.seed, 2));
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut total, mut kl, mut recon) = (0.0, 0.0, 0.0);
        for idx in order.chunks(config.batch_size) {
            let batch = data.select(Axis(0), idx);
            let (grads, loss) = batch_step(model, &batch, config.latent_samples, &mut latent_rng)
                .map_err(|e| match e {
                    Error::NumericFailure(msg) => Error::NumericFailure(format!("epoch {epoch}: {msg}")),
                    other => other,
                })?;
            let w = idx.len() as f64;
            total += loss.total * w;
            kl += loss.kl_term * w;
            recon += loss.recon_term * w;
            apply_adam(model, &grads, &mut adam)?;
        }
        let n = data.nrows() as f64;
        let record = EpochLoss {
            epoch,
            total: total / n,
            kl: kl / n,
            recon: recon / n,
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok(history)
}

fn batch_step<M: Trainable>(
    model: &M,
    batch: &Array2<f64>,
    draws: usize,
    rng: &mut Rng,
) -> Result<(Vec<DenseGrad>, LossBreakdown)> {
    let (mut grads, first) = model.gradients(batch, rng)?;
    if draws == 1 {
        return Ok((grads, first));
    }
    let (mut kl, mut recon) = (first.kl_term, first.recon_term);
    for _ in 1..draws {
        let (g, l) = model.gradients(batch, rng)?;
        for (acc, g) in grads.iter_mut().zip(&g) {
            acc.add_assign(g);
        }
        kl += l.kl_term;
        recon += l.recon_term;
    }
    let inv = 1.0 / draws as f64;
    for g in &mut grads {
        g.scale(inv);
    }
    Ok((grads, LossBreakdown::new(kl * inv, recon * inv)))
}

fn apply_adam<M: Trainable>(model: &mut M, grads: &[DenseGrad], adam: &mut AdamState) -> Result<()> {
    let mut layers = model.layers_mut();
    let mut params: Vec<&mut [f64]> = Vec::with_capacity(layers.len() * 2);
    for layer in layers.iter_mut() {
        let Dense { weights, bias, .. } = &mut **layer;
        params.push(weights.as_slice_mut().expect("standard layout"));
        params.push(bias.as_slice_mut().expect("standard layout"));
    }
    let grad_slices: Vec<&[f64]> = grads
        .iter()
        .flat_map(|g| {
            [
                g.weights.as_slice().expect("standard layout"),
                g.bias.as_slice().expect("standard layout"),
            ]
        })
        .collect();
    adam_step(&mut params, &grad_slices, adam)
}

/// Initialize a VAE from `config.seed` and train it on the rows of `data`.
pub fn train(data: &Array2<f64>, plan: &LayerPlan, config: &TrainConfig) -> Result<(MlpVae, Vec<EpochLoss>)> {
    train_with_progress(data, plan, config, |_| {})
}

pub fn train_with_progress(
    data: &Array2<f64>,
    plan: &LayerPlan,
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochLoss),
) -> Result<(MlpVae, Vec<EpochLoss>)> {
    let mut model = MlpVae::init(plan, derive_seed(config.seed, 0))?;
    let history = fit(&mut model, data, config, on_epoch)?;
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn tiny_plan() -> LayerPlan {
        LayerPlan {
            input_dim: 32,
            hidden: vec![16, 8],
            latent_dim: 2,
        }
    }

    fn data(rows: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded(seed);
        Array2::from_shape_simple_fn((rows, 32), || rng.random_range(0.05..0.95))
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let empty = Array2::zeros((0, 32));
        assert!(matches!(
            train(&empty, &tiny_plan(), &TrainConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn training_is_reproducible() {
        let x = data(50, 1);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 8,
            seed: 12,
            ..TrainConfig::default()
        };
        let (m1, h1) = train(&x, &tiny_plan(), &config).unwrap();
        let (m2, h2) = train(&x, &tiny_plan(), &config).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.len(), 3);
        for e in &h1 {
            assert!((e.total - (e.kl + e.recon)).abs() < 1e-9 * e.total.abs().max(1.0));
        }
    }

    #[test]
    fn multiple_latent_draws_train() {
        let x = data(20, 2);
        let config = TrainConfig {
            epochs: 2,
            batch_size: 5,
            latent_samples: 3,
            ..TrainConfig::default()
        };
        let (_, history) = train(&x, &tiny_plan(), &config).unwrap();
        assert!(history.iter().all(|e| e.total.is_finite()));
    }
}
