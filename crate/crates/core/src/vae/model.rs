//! Fully-connected variational autoencoder.
//!
//! Encoder: LeakyReLU hidden layers, then two parallel heads producing the
//! posterior mean (identity) and standard deviation (softplus). Decoder
//! mirrors the encoder widths and ends in a full-width layer squashed onto
//! `[0, 1]`.

use ndarray::{Array2, Zip};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};
use crate::spectrogram::SPEC_PIXELS;
use crate::vae::nn::{Activation, Dense, DenseGrad, Stack, LEAKY_SLOPE};

/// Layer widths of a VAE or autoencoder. Decoder widths mirror `hidden`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPlan {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl LayerPlan {
    /// 4096 -> 1024 -> 256 -> 64 -> 8.
    pub fn standard() -> Self {
        LayerPlan {
            input_dim: SPEC_PIXELS,
            hidden: vec![1024, 256, 64],
            latent_dim: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::invalid(format!("layer plan has a zero width: {self:?}")));
        }
        Ok(())
    }

    fn encoder_widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim).chain(self.hidden.iter().copied()).collect()
    }

    fn decoder_widths(&self) -> Vec<usize> {
        std::iter::once(self.latent_dim)
            .chain(self.hidden.iter().rev().copied())
            .chain(std::iter::once(self.input_dim))
            .collect()
    }

    pub(crate) fn build_encoder(&self, rng: &mut Rng) -> Stack {
        let w = self.encoder_widths();
        Stack::new(
            w.windows(2)
                .map(|p| Dense::init(p[0], p[1], Activation::LeakyRelu, rng))
                .collect(),
        )
    }

    pub(crate) fn build_decoder(&self, rng: &mut Rng) -> Stack {
        let w = self.decoder_widths();
        let last = w.len() - 2;
        Stack::new(
            w.windows(2)
                .enumerate()
                .map(|(i, p)| {
                    let act = if i == last {
                        Activation::TanhUnit
                    } else {
                        Activation::LeakyRelu
                    };
                    Dense::init(p[0], p[1], act, rng)
                })
                .collect(),
        )
    }

    pub(crate) fn encoder_out(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }
}

/// Per-sample (or batch-mean) loss terms. `total = kl_term + recon_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub kl_term: f64,
    pub recon_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(kl_term: f64, recon_term: f64) -> Self {
        LossBreakdown {
            kl_term,
            recon_term,
            total: kl_term + recon_term,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpVae {
    encoder: Stack,
    mu_head: Dense,
    sigma_head: Dense,
    decoder: Stack,
}

/// The standard-width VAE with parameters drawn from `seed`.
pub fn init_model(seed: u64) -> MlpVae {
    MlpVae::init(&LayerPlan::standard(), seed).expect("standard plan is valid")
}

impl MlpVae {
    pub fn init(plan: &LayerPlan, seed: u64) -> Result<Self> {
        plan.validate()?;
        let mut rng = seeded(seed);
        let encoder = plan.build_encoder(&mut rng);
        let mu_head = Dense::init(plan.encoder_out(), plan.latent_dim, Activation::Identity, &mut rng);
        let sigma_head = Dense::init(plan.encoder_out(), plan.latent_dim, Activation::Softplus, &mut rng);
        let decoder = plan.build_decoder(&mut rng);
        Ok(MlpVae {
            encoder,
            mu_head,
            sigma_head,
            decoder,
        })
    }

    /// Rebuild from the flat layer list produced by [`MlpVae::layers`]:
    /// encoder hidden layers, mean head, deviation head, decoder layers.
    pub fn from_layers(mut layers: Vec<Dense>) -> Result<Self> {
        if layers.len() < 3 || (layers.len() - 3) % 2 != 0 {
            return Err(Error::format(format!(
                "a VAE needs 2h+3 layers, got {}",
                layers.len()
            )));
        }
        let hidden = (layers.len() - 3) / 2;
        let decoder = layers.split_off(hidden + 2);
        let sigma_head = layers.pop().expect("length checked");
        let mu_head = layers.pop().expect("length checked");
        let model = MlpVae {
            encoder: Stack::new(layers),
            mu_head,
            sigma_head,
            decoder: Stack::new(decoder),
        };
        model.check_structure()?;
        Ok(model)
    }

    fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::format(msg));
        for (i, l) in self.layers().iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return bad(format!("layer {i}: bias length {} != width {}", l.bias.len(), l.output_dim()));
            }
        }
        let input = self.input_dim();
        let mut width = input;
        for (i, l) in self.encoder.layers.iter().enumerate() {
            if l.input_dim() != width || l.activation != Activation::LeakyRelu {
                return bad(format!("encoder layer {i} does not chain or is not LeakyReLU"));
            }
            width = l.output_dim();
        }
        if self.mu_head.input_dim() != width
            || self.sigma_head.input_dim() != width
            || self.mu_head.output_dim() != self.sigma_head.output_dim()
        {
            return bad("latent heads do not match the encoder output".into());
        }
        if self.mu_head.activation != Activation::Identity || self.sigma_head.activation != Activation::Softplus {
            return bad("latent heads must be identity (mean) and softplus (deviation)".into());
        }
        width = self.mu_head.output_dim();
        let n = self.decoder.layers.len();
        for (i, l) in self.decoder.layers.iter().enumerate() {
            let expected = if i + 1 == n {
                Activation::TanhUnit
            } else {
                Activation::LeakyRelu
            };
            if l.input_dim() != width || l.activation != expected {
                return bad(format!("decoder layer {i} does not chain or has the wrong activation"));
            }
            width = l.output_dim();
        }
        if width != input {
            return bad(format!("decoder emits {width} values for {input} inputs"));
        }
        Ok(())
    }

    pub fn plan(&self) -> LayerPlan {
        LayerPlan {
            input_dim: self.input_dim(),
            hidden: self.encoder.layers.iter().map(Dense::output_dim).collect(),
            latent_dim: self.latent_dim(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder
            .layers
            .first()
            .unwrap_or(&self.mu_head)
            .input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.mu_head.output_dim()
    }

    pub fn leaky_slope(&self) -> f64 {
        LEAKY_SLOPE
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// All layers in serialization order.
    pub fn layers(&self) -> Vec<&Dense> {
        self.encoder
            .layers
            .iter()
            .chain([&self.mu_head, &self.sigma_head])
            .chain(self.decoder.layers.iter())
            .collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Dense> {
        self.encoder
            .layers
            .iter_mut()
            .chain([&mut self.mu_head, &mut self.sigma_head])
            .chain(self.decoder.layers.iter_mut())
            .collect()
    }

    /// Posterior mean and deviation for each row of `x`.
    pub fn encode_batch(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let h = self.encoder.forward(x);
        (self.mu_head.forward(&h).1, self.sigma_head.forward(&h).1)
    }

    pub fn decode_batch(&self, z: &Array2<f64>) -> Array2<f64> {
        self.decoder.forward(z)
    }

    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_vector(x, self.input_dim(), "input")?;
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        let (mu, sigma) = self.encode_batch(&xb);
        Ok((mu.into_raw_vec_and_offset().0, sigma.into_raw_vec_and_offset().0))
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_vector(z, self.latent_dim(), "latent")?;
        let zb = Array2::from_shape_vec((1, z.len()), z.to_vec()).expect("row vector");
        Ok(self.decode_batch(&zb).into_raw_vec_and_offset().0)
    }
}

fn check_vector(v: &[f64], len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::invalid(format!("{what} has length {}, expected {len}", v.len())));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} element {i} is not finite")));
    }
    Ok(())
}

/// `z = mu + sigma * e` with `e` standard normal.
pub fn reparameterize(mu: &[f64], sigma: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    if mu.len() != sigma.len() {
        return Err(Error::invalid("mu and sigma lengths differ"));
    }
    if let Some(s) = sigma.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::invalid(format!("sigma must be positive, got {s}")));
    }
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| {
            let e: f64 = StandardNormal.sample(rng);
            m + s * e
        })
        .collect())
}

/// `1/2 * sum(mu^2 + sigma^2 - 1 - ln sigma^2)`.
pub fn kl_term(mu: &[f64], sigma: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| m * m + s * s - 1.0 - (s * s).ln())
        .sum::<f64>()
}

/// Gradient of [`kl_term`] with respect to `(mu, sigma)`.
pub fn kl_gradients(mu: &[f64], sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (mu.to_vec(), sigma.iter().map(|&s| s - 1.0 / s).collect())
}

/// Loss of one sample with a single latent draw already decoded to `x_hat`.
pub fn loss(x: &[f64], mu: &[f64], sigma: &[f64], x_hat: &[f64]) -> Result<LossBreakdown> {
    if x.len() != x_hat.len() || mu.len() != sigma.len() {
        return Err(Error::invalid("loss: mismatched shapes"));
    }
    let kl = kl_term(mu, sigma);
    let recon: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let out = LossBreakdown::new(kl, recon);
    if !out.total.is_finite() {
        return Err(Error::NumericFailure(format!("loss is not finite (kl {kl}, recon {recon})")));
    }
    Ok(out)
}

/// Batch-mean loss and gradients with latent noise drawn from `rng`.
pub fn backward(model: &MlpVae, x: &Array2<f64>, rng: &mut Rng) -> Result<(Vec<DenseGrad>, LossBreakdown)> {
    let eps = Array2::from_shape_simple_fn((x.nrows(), model.latent_dim()), || StandardNormal.sample(rng));
    backward_with_noise(model, x, &eps)
}

/// Batch-mean loss and gradients for a fixed latent draw `eps`
/// (one row per sample). Gradients are listed in [`MlpVae::layers`] order.
pub fn backward_with_noise(
    model: &MlpVae,
    x: &Array2<f64>,
    eps: &Array2<f64>,
) -> Result<(Vec<DenseGrad>, LossBreakdown)> {
    let batch = x.nrows();
    if batch == 0 || x.ncols() != model.input_dim() {
        return Err(Error::invalid(format!(
            "batch shape {:?} does not fit input width {}",
            x.dim(),
            model.input_dim()
        )));
    }
    if eps.dim() != (batch, model.latent_dim()) {
        return Err(Error::invalid("latent noise shape mismatch"));
    }
    let scale = 1.0 / batch as f64;

    let (h, enc_cache) = model.encoder.forward_cached(x);
    let (mu_pre, mu) = model.mu_head.forward(&h);
    let (sigma_pre, sigma) = model.sigma_head.forward(&h);
    let z = &mu + &(&sigma * eps);
    let (x_hat, dec_cache) = model.decoder.forward_cached(&z);

    let mut kl = 0.0;
    let mut recon = 0.0;
    for i in 0..batch {
        let m = mu.row(i);
        let s = sigma.row(i);
        kl += 0.5
            * m.iter()
                .zip(s.iter())
                .map(|(&m, &s)| m * m + s * s - 1.0 - (s * s).ln())
                .sum::<f64>();
        recon += x
            .row(i)
            .iter()
            .zip(x_hat.row(i).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let breakdown = LossBreakdown::new(kl * scale, recon * scale);
    if !breakdown.total.is_finite() {
        return Err(Error::NumericFailure(format!(
            "non-finite loss (kl {}, recon {})",
            breakdown.kl_term, breakdown.recon_term
        )));
    }

    let d_xhat = (&x_hat - x) * (2.0 * scale);
    let (dec_grads, dz) = model.decoder.backward(&dec_cache, d_xhat, true);
    let dz = dz.expect("decoder input gradient");

    let mut d_mu = dz.clone();
    Zip::from(&mut d_mu).and(&mu).for_each(|d, &m| *d += m * scale);
    let mut d_sigma = dz * eps;
    Zip::from(&mut d_sigma)
        .and(&sigma)
        .for_each(|d, &s| *d += (s - 1.0 / s) * scale);

    let need_h = !model.encoder.layers.is_empty();
    let (mu_grad, dh_mu) = model.mu_head.backward(&h, &mu_pre, d_mu, need_h);
    let (sigma_grad, dh_sigma) = model.sigma_head.backward(&h, &sigma_pre, d_sigma, need_h);
    let enc_grads = match (dh_mu, dh_sigma) {
        (Some(a), Some(b)) => model.encoder.backward(&enc_cache, a + b, false).0,
        _ => Vec::new(),
    };

    let grads: Vec<DenseGrad> = enc_grads
        .into_iter()
        .chain([mu_grad, sigma_grad])
        .chain(dec_grads)
        .collect();
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NumericFailure(format!("non-finite gradient in layer {i}")));
    }
    Ok((grads, breakdown))
}
