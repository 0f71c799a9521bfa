//! Variational autoencoder: layers, model, optimizer and training loop.

pub mod adam;
pub mod model;
pub mod nn;
pub mod theory;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use model::{
    backward, backward_with_noise, init_model, kl_gradients, kl_term, loss, reparameterize, LayerPlan,
    LossBreakdown, MlpVae,
};
pub use nn::{Activation, Dense, DenseGrad, Stack, LEAKY_SLOPE};
pub use theory::{generation_error, optimal_decoder_mean};
pub use train::{fit, train, train_with_progress, EpochLoss, TrainConfig, Trainable};
