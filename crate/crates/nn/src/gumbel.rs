//! Categorical sampling through the Gumbel-Softmax relaxation.

use rand::Rng;
use rand_distr::{Distribution, Gumbel};

use crate::{NnError, Result};

/// Numerically stable `softmax(logits / temperature)`.
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_temperature(temperature)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| ((l - max) / temperature).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    Ok(out)
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(NnError::InvalidTemperature(temperature))
    }
}

/// `softmax((logits + g) / temperature)` with `g` i.i.d. standard Gumbel.
/// Gradients with respect to the logits go through [`softmax_backward`]
/// applied to the returned probabilities.
pub fn gumbel_softmax_sample<R: Rng + ?Sized>(
    logits: &[f64],
    temperature: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_temperature(temperature)?;
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit scale");
    let noisy: Vec<f64> = logits.iter().map(|&l| l + gumbel.sample(rng)).collect();
    let mut p = softmax(&noisy, temperature)?;
    // keep entries strictly positive even when one logit dominates
    let floor = f64::MIN_POSITIVE;
    if p.iter().any(|&x| x < floor) {
        p.iter_mut().for_each(|x| *x = x.max(floor));
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
    }
    Ok(p)
}

/// Vector-Jacobian product of `p = softmax(z / temperature)`:
/// `∂(upstreamᵀ p)/∂z = p ⊙ (upstream − pᵀupstream) / temperature`.
pub fn softmax_backward(p: &[f64], upstream: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_temperature(temperature)?;
    if p.len() != upstream.len() {
        return Err(NnError::Dimension {
            what: "softmax upstream",
            expected: p.len(),
            got: upstream.len(),
        });
    }
    let dot: f64 = p.iter().zip(upstream).map(|(a, b)| a * b).sum();
    Ok(p
        .iter()
        .zip(upstream)
        .map(|(&pi, &ui)| pi * (ui - dot) / temperature)
        .collect())
}

/// Index of the first maximal entry.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn onehot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// One at the first maximal index.
pub fn onehot_argmax(p: &[f64]) -> Vec<f64> {
    onehot(argmax(p), p.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehot_examples() {
        assert_eq!(onehot_argmax(&[0.2, 0.5, 0.3]), vec![0.0, 1.0, 0.0]);
        assert_eq!(onehot_argmax(&[0.5, 0.5]), vec![1.0, 0.0]);
        assert_eq!(onehot_argmax(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn temperature_must_be_positive() {
        let mut rng = rand::rng();
        assert!(matches!(
            gumbel_softmax_sample(&[0.0, 1.0], 0.0, &mut rng),
            Err(NnError::InvalidTemperature(_))
        ));
        assert!(gumbel_softmax_sample(&[0.0, 1.0], -1.0, &mut rng).is_err());
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let b = softmax(&[1001.0, 1002.0, 1003.0], 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_logits_stay_positive() {
        let mut rng = rand::rng();
        let p = gumbel_softmax_sample(&[1000.0, -1000.0], 0.01, &mut rng).unwrap();
        assert!(p.iter().all(|&x| x > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
