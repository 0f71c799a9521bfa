//! Scalar model of the decoder's job for one latent code: given the inputs
//! `values` that map to that code and their conditional probabilities, the
//! generation error of a decoder output `f` is the probability-weighted
//! squared error, and its minimizer is the probability-weighted mean.

use crate::error::{Error, Result};

fn check_distribution(values: &[f64], probs: &[f64]) -> Result<()> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::invalid(format!(
            "{} values with {} probabilities",
            values.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// `sum_n p_n (v_n - f)^2`.
pub fn generation_error(values: &[f64], probs: &[f64], f: f64) -> Result<f64> {
    check_distribution(values, probs)?;
    Ok(values.iter().zip(probs).map(|(&v, &p)| p * (v - f) * (v - f)).sum())
}

/// `sum_n p_n v_n / sum_n p_n`, the minimizer of [`generation_error`].
pub fn optimal_decoder_mean(values: &[f64], probs: &[f64]) -> Result<f64> {
    check_distribution(values, probs)?;
    let weighted: f64 = values.iter().zip(probs).map(|(&v, &p)| p * v).sum();
    Ok(weighted / probs.iter().sum::<f64>())
}
