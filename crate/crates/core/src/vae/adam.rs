//! Adam with bias correction.

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS_HAT: f64 = 1e-8;

/// Moment estimates for a list of parameter tensors, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero moments for tensors of the given lengths.
    pub fn new(sizes: &[usize]) -> Self {
        Self::with_alpha(sizes, DEFAULT_ALPHA)
    }

    pub fn with_alpha(sizes: &[usize], alpha: f64) -> Self {
        AdamState {
            alpha,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps_hat: DEFAULT_EPS_HAT,
            step: 0,
            first_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }
}

/// One Adam update of every tensor in `params` using `grads`.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::invalid(format!(
            "adam: {} parameter tensors, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.first_moment[i].len() {
            return Err(Error::invalid(format!(
                "adam: tensor {i} has {} parameters, {} gradients, {} moments",
                p.len(),
                g.len(),
                state.first_moment[i].len()
            )));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let (alpha, eps) = (state.alpha, state.eps_hat);

    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= alpha * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(p: &mut [f64], g: &[f64], state: &mut AdamState) {
        adam_step(&mut [p], &[g], state).unwrap();
    }

    #[test]
    fn first_step_moves_by_alpha() {
        let mut state = AdamState::new(&[1]);
        let mut p = [1.0];
        step(&mut p, &[2.0], &mut state);
        let expected = 1.0 - 0.001 * 2.0 / (2.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - 0.999).abs() < 1e-10);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut state = AdamState::new(&[3]);
        let mut p = [0.5, -1.0, 2.0];
        step(&mut p, &[0.0; 3], &mut state);
        assert_eq!(p, [0.5, -1.0, 2.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn constant_gradient_trajectory() {
        // With a constant gradient g, m_hat = g and v_hat = g^2 at every step,
        // so each update is alpha * g / (|g| + eps).
        let g = 0.3;
        let per_step = 0.001 * g / (g + 1e-8);
        let mut state = AdamState::new(&[1]);
        let mut p = [5.0];
        let mut prev = p[0];
        for k in 1..=100 {
            step(&mut p, &[g], &mut state);
            assert!(p[0] < prev);
            let delta = prev - p[0];
            assert!((delta - per_step).abs() < 1e-12, "step {k}: {delta}");
            prev = p[0];
        }
        assert!((p[0] - (5.0 - 100.0 * per_step)).abs() < 1e-10);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::new(&[2]);
        let mut p = [0.0; 3];
        assert!(matches!(
            adam_step(&mut [&mut p[..]], &[&[0.0; 3][..]], &mut state),
            Err(Error::InvalidArgument(_))
        ));
        let mut q = [0.0; 2];
        assert!(adam_step(&mut [&mut q[..]], &[&[0.0; 1][..]], &mut state).is_err());
        assert!(adam_step(&mut [], &[], &mut state).is_err());
    }
}
