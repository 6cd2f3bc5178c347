//! Inverted dropout. Surviving activations are scaled by `1 / (1 - rate)`
//! at training time so inference is a plain identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config as config_err, Result};

/// Deterministic dropout mask: each entry is `0` with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask(len: usize, rate: f64, seed: u64) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep_scale })
        .collect()
}

/// Applies inverted dropout. In eval mode (`train = false`) the input passes
/// through untouched. The rate must be in `[0, 1)`.
pub fn dropout(x: &[f64], rate: f64, seed: u64, train: bool) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(config_err(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if !train {
        return Ok(x.to_vec());
    }
    let mask = dropout_mask(x.len(), rate, seed);
    Ok(x.iter().zip(&mask).map(|(v, m)| v * m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_mode_is_identity() {
        let x = [1.0, -2.0, 3.5];
        assert_eq!(dropout(&x, 0.25, 9, false).unwrap(), x.to_vec());
    }

    #[test]
    fn train_mode_scales_survivors() {
        let x = [1.0; 400];
        let out = dropout(&x, 0.25, 9, true).unwrap();
        for v in &out {
            assert!(*v == 0.0 || (*v - 4.0 / 3.0).abs() < 1e-12, "got {v}");
        }
        let dropped = out.iter().filter(|v| **v == 0.0).count();
        // 400 draws at rate 0.25: expect roughly 100 zeros.
        assert!((60..=140).contains(&dropped), "dropped {dropped}");
        // Same seed, same mask; different seed, different mask.
        assert_eq!(out, dropout(&x, 0.25, 9, true).unwrap());
        assert_ne!(out, dropout(&x, 0.25, 10, true).unwrap());
    }

    #[test]
    fn zero_rate_is_identity_even_in_train_mode() {
        let x = [1.0, 2.0];
        assert_eq!(dropout(&x, 0.0, 1, true).unwrap(), x.to_vec());
    }

    #[test]
    fn invalid_rates_error() {
        assert!(dropout(&[1.0], 1.0, 1, true).is_err());
        assert!(dropout(&[1.0], -0.2, 1, true).is_err());
    }
}
