//! Dense layers with hand-written backpropagation.
//!
//! Activations are batched row-wise: a batch is an `(batch, features)`
//! matrix and weights are stored `(fan_in, fan_out)`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;

use crate::rng::Rng;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    LeakyRelu,
    Softplus,
    /// `(1 + tanh(z)) / 2`, a tanh squashed onto `[0, 1]`.
    TanhUnit,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::LeakyRelu => 1,
            Activation::Softplus => 2,
            Activation::TanhUnit => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::LeakyRelu),
            2 => Some(Activation::Softplus),
            3 => Some(Activation::TanhUnit),
            _ => None,
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Softplus => softplus(z),
            Activation::TanhUnit => 0.5 * (1.0 + z.tanh()),
        }
    }

    /// d(apply)/dz evaluated at pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Softplus => sigmoid(z),
            Activation::TanhUnit => {
                let t = z.tanh();
                0.5 * (1.0 - t * t)
            }
        }
    }
}

pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Weights uniform in `+/- sqrt(3 / fan_in)`, biases zero.
    pub fn init(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = (3.0 / fan_in as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit));
        Dense {
            weights,
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Returns `(pre_activation, output)`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let mut pre = x.dot(&self.weights);
        pre += &self.bias;
        let act = self.activation;
        let out = pre.mapv(|z| act.apply(z));
        (pre, out)
    }

    /// Backpropagate `d_out` (gradient w.r.t. this layer's output).
    /// Returns the parameter gradient and, if requested, the input gradient.
    pub fn backward(
        &self,
        input: &Array2<f64>,
        pre: &Array2<f64>,
        mut d_out: Array2<f64>,
        need_input_grad: bool,
    ) -> (DenseGrad, Option<Array2<f64>>) {
        let act = self.activation;
        if act != Activation::Identity {
            d_out.zip_mut_with(pre, |d, &z| *d *= act.derivative(z));
        }
        let grad = DenseGrad {
            weights: input.t().dot(&d_out),
            bias: d_out.sum_axis(Axis(0)),
        };
        let d_input = need_input_grad.then(|| d_out.dot(&self.weights.t()));
        (grad, d_input)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseGrad {
    pub fn zeros_like(layer: &Dense) -> Self {
        DenseGrad {
            weights: Array2::zeros(layer.weights.raw_dim()),
            bias: Array1::zeros(layer.bias.raw_dim()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights *= factor;
        self.bias *= factor;
    }

    pub fn add_assign(&mut self, other: &DenseGrad) {
        self.weights += &other.weights;
        self.bias += &other.bias;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StackCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

/// A feed-forward chain of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub layers: Vec<Dense>,
}

impl Stack {
    pub fn new(layers: Vec<Dense>) -> Self {
        Stack { layers }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h).1;
        }
        h
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, StackCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (z, a) = layer.forward(&h);
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        (h, StackCache { inputs, pre })
    }

    /// Gradients for every layer (in layer order) and, if requested, the
    /// gradient with respect to the stack input.
    pub fn backward(
        &self,
        cache: &StackCache,
        d_out: Array2<f64>,
        need_input_grad: bool,
    ) -> (Vec<DenseGrad>, Option<Array2<f64>>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = Some(d_out);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let want_input = i > 0 || need_input_grad;
            let (g, d_in) = layer.backward(
                &cache.inputs[i],
                &cache.pre[i],
                d.take().expect("gradient present"),
                want_input,
            );
            grads.push(g);
            d = d_in;
        }
        grads.reverse();
        (grads, d)
    }
}
