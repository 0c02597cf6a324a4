use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|&l| l - lse).collect()
}

pub fn categorical_entropy(logits: &[f64]) -> f64 {
    log_softmax(logits)
        .iter()
        .map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { -lp.exp() * lp })
        .sum()
}

/// Samples an index given log-probabilities.
pub fn sample_categorical(log_probs: &[f64], rng: &mut Rng) -> Result<usize> {
    if log_probs.is_empty() || log_probs.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NumericalFault(format!("cannot sample from {log_probs:?}")));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return Ok(i);
        }
    }
    // rounding left u above the cumulative total; take the last likely index
    Ok(log_probs
        .iter()
        .rposition(|lp| *lp > f64::NEG_INFINITY)
        .unwrap_or(log_probs.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn uniform_entropy() {
        assert!((categorical_entropy(&[0.0; 10]) - 10f64.ln()).abs() < 1e-12);
        assert!(categorical_entropy(&[40.0, -40.0]) < 1e-30);
    }

    #[test]
    fn sampling_rejects_nan() {
        let mut r = stream(0, Purpose::ActionSampling, 0, 0);
        assert!(matches!(
            sample_categorical(&[f64::NAN, 0.0], &mut r),
            Err(Error::NumericalFault(_))
        ));
    }
}
