//! Probability utilities shared by the interpreter and the native models.

use crate::error::EvalError;

/// Floor applied to every emitted choice probability.
pub const PROB_EPS: f64 = 1e-10;

/// Denominator magnitudes below this raise a numerics error instead of Inf.
pub const DIV_EPS: f64 = 1e-12;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Result<Vec<f64>, EvalError> {
    if xs.is_empty() {
        return Err(EvalError::Numerics("softmax of empty vector".into()));
    }
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(EvalError::Numerics("softmax over non-finite values".into()));
    }
    let exps: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(EvalError::Numerics("softmax normalization failed".into()));
    }
    Ok(exps.iter().map(|e| e / sum).collect())
}

/// Normalizes a raw probability vector and clamps entries into
/// [PROB_EPS, 1 - PROB_EPS].
pub fn normalize_probs(raw: &[f64]) -> Result<Vec<f64>, EvalError> {
    if raw.is_empty() {
        return Err(EvalError::Numerics("empty probability vector".into()));
    }
    if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(EvalError::Numerics(
            "probability vector has negative or non-finite entries".into(),
        ));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(EvalError::Numerics(format!(
            "probability vector sums to {}",
            sum
        )));
    }
    Ok(raw.iter().map(|p| clamp_prob(p / sum)).collect())
}

/// Draws an index from a normalized probability vector.
pub fn sample_index<R: rand::Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
