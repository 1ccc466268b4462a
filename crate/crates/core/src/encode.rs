//! Classical ↔ amplitude encodings.
//!
//! Amplitude regularization reserves the last basis state of an
//! `n_embed`-qubit register: `2^n − 1` features in `[0, 1]` are scaled by
//! `1/2^n`, and the reserved amplitude `r` absorbs the remaining norm. Each
//! feature's amplitude therefore depends on that feature alone, and decoding
//! is exact via `2^n · √p`.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};

/// Amplitudes of a regularized embedding; the last entry is the reserved state.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedVector {
    pub n_embed: usize,
    pub amplitudes: Vec<f64>,
}

impl RegularizedVector {
    pub fn reserved(&self) -> f64 {
        *self.amplitudes.last().expect("regularized vector is never empty")
    }
}

fn embed_len(n_embed: usize) -> Result<usize> {
    if n_embed == 0 || n_embed > crate::statevector::MAX_QUBITS {
        return Err(Error::Config(format!("embedding width {n_embed} out of range")));
    }
    Ok(1 << n_embed)
}

/// Encodes `2^n_embed − 1` features in `[0, 1]`.
pub fn regularize(features: &[f64], n_embed: usize) -> Result<RegularizedVector> {
    let dim = embed_len(n_embed)?;
    if features.len() != dim - 1 {
        return Err(Error::Encoding(format!(
            "{} features for a {n_embed}-qubit regularized embedding (expected {})",
            features.len(),
            dim - 1
        )));
    }
    if let Some(bad) = features.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Encoding(format!("feature {bad} outside [0, 1]")));
    }
    let scale = dim as f64;
    let mut amplitudes: Vec<f64> = features.iter().map(|f| f / scale).collect();
    let used: f64 = amplitudes.iter().map(|a| a * a).sum();
    amplitudes.push((1.0 - used).max(0.0).sqrt());
    Ok(RegularizedVector { n_embed, amplitudes })
}

/// Inverts [`regularize`] from measured probabilities; the reserved entry is dropped.
///
/// Decoded values are clamped to `[0, 1]`.
pub fn deregularize(probs: &[f64], n_embed: usize) -> Result<Vec<f64>> {
    let dim = embed_len(n_embed)?;
    check_probabilities(probs, dim)?;
    let scale = dim as f64;
    Ok(probs[..dim - 1]
        .iter()
        .map(|p| (scale * p.max(0.0).sqrt()).clamp(0.0, 1.0))
        .collect())
}

pub(crate) fn check_probabilities(probs: &[f64], dim: usize) -> Result<()> {
    if probs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: probs.len(),
        });
    }
    if let Some(bad) = probs.iter().find(|p| **p < -1e-9 || !p.is_finite()) {
        return Err(Error::Numeric(format!("invalid probability {bad}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// Zero-pads `features` to `target_len` and divides by the Euclidean norm.
pub fn plain_normalize(features: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if !target_len.is_power_of_two() || features.len() > target_len {
        return Err(Error::Encoding(format!(
            "cannot pad {} features to length {target_len}",
            features.len()
        )));
    }
    let norm = features.iter().map(|f| f * f).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Encoding(format!("cannot normalize a vector of norm {norm}")));
    }
    let mut out: Vec<f64> = features.iter().map(|f| f / norm).collect();
    out.resize(target_len, 0.0);
    Ok(out)
}

/// Row-major `batch_size × n_qubits` rotation angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    pub n_qubits: usize,
    pub values: Vec<f64>,
}

impl NoiseBatch {
    pub fn batch_size(&self) -> usize {
        self.values.len() / self.n_qubits
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_qubits)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_qubits..(i + 1) * self.n_qubits]
    }
}

pub fn sample_noise<R: Rng + ?Sized>(batch_size: usize, n_qubits: usize, rng: &mut R) -> Result<NoiseBatch> {
    if batch_size == 0 || n_qubits == 0 {
        return Err(Error::Config(format!(
            "noise batch shape ({batch_size}, {n_qubits}) must be non-empty"
        )));
    }
    let values = (0..batch_size * n_qubits).map(|_| rng.gen_range(0.0..TAU)).collect();
    Ok(NoiseBatch { n_qubits, values })
}

/// Maps a Pauli-Z expectation in `[-1, 1]` to a probability-like score in `[0, 1]`.
pub fn z_to_unit(z: f64) -> f64 {
    ((z + 1.0) / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn regularize_examples() {
        let v = regularize(&[0.0; 7], 3).unwrap();
        assert_eq!(v.amplitudes, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);

        let v = regularize(&[1.0; 7], 3).unwrap();
        assert!(v.amplitudes[..7].iter().all(|&a| a == 0.125));
        assert_abs_diff_eq!(v.reserved(), 57f64.sqrt() / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.reserved(), 0.94373, epsilon = 1e-5);

        let mut f = [0.0; 7];
        f[0] = 0.5;
        let v = regularize(&f, 3).unwrap();
        assert_eq!(v.amplitudes[0], 0.0625);
        assert_abs_diff_eq!(v.reserved(), (1.0 - 0.0625f64.powi(2)).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn regularize_rejects_bad_input() {
        assert!(matches!(regularize(&[1.2, 0.0, 0.0], 2), Err(Error::Encoding(_))));
        assert!(matches!(regularize(&[-0.1, 0.0, 0.0], 2), Err(Error::Encoding(_))));
        assert!(matches!(regularize(&[0.1; 6], 3), Err(Error::Encoding(_))));
    }

    #[test]
    fn deregularize_examples() {
        let mut probs = vec![0.0; 8];
        probs[0] = 1.0;
        let f = deregularize(&probs, 3).unwrap();
        assert_eq!(f[0], 1.0);
        assert!(f[1..].iter().all(|&v| v == 0.0));

        let f = deregularize(&[0.125; 8], 3).unwrap();
        assert_eq!(f, vec![1.0; 7]);

        let mut bad = vec![0.125; 8];
        bad[2] = -1e-3;
        bad[3] += 1e-3;
        assert!(matches!(deregularize(&bad, 3), Err(Error::Numeric(_))));
        assert!(deregularize(&[0.5; 8], 3).is_err());
    }

    #[test]
    fn plain_normalize_examples() {
        let h = FRAC_1_SQRT_2;
        let v = plain_normalize(&[h, h, h, 0.0], 4).unwrap();
        let t = 1.0 / 3f64.sqrt();
        for (a, e) in v.iter().zip([t, t, t, 0.0]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
        assert_eq!(plain_normalize(&[3.0, 4.0], 4).unwrap(), vec![0.6, 0.8, 0.0, 0.0]);
        assert!(matches!(plain_normalize(&[0.0, 0.0], 2), Err(Error::Encoding(_))));
        assert!(plain_normalize(&[1.0; 5], 4).is_err());
    }

    #[test]
    fn noise_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = sample_noise(20, 5, &mut rng).unwrap();
        assert_eq!(batch.batch_size(), 20);
        assert_eq!(batch.rows().len(), 20);
        assert!(batch.values.iter().all(|v| (0.0..TAU).contains(v)));
        let again = sample_noise(20, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(batch, again);
        assert!(sample_noise(0, 5, &mut rng).is_err());
    }

    #[test]
    fn z_to_unit_examples() {
        assert_eq!(z_to_unit(1.0), 1.0);
        assert_eq!(z_to_unit(-1.0), 0.0);
        assert_eq!(z_to_unit(0.0), 0.5);
        assert_abs_diff_eq!(z_to_unit(0.2), 0.6, epsilon = 1e-15);
        assert_eq!(z_to_unit(1.0 + 1e-10), 1.0);
    }

    proptest! {
        #[test]
        fn regularization_is_unit_norm_and_invertible(f in prop::collection::vec(0.0..=1.0f64, 7)) {
            let v = regularize(&f, 3).unwrap();
            let total: f64 = v.amplitudes.iter().map(|a| a * a).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(v.reserved() >= 0.0);
            let probs: Vec<f64> = v.amplitudes.iter().map(|a| a * a).collect();
            let back = deregularize(&probs, 3).unwrap();
            for (a, b) in back.iter().zip(&f) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn features_encode_independently(
            f in prop::collection::vec(0.0..=1.0f64, 15),
            j in 0usize..15,
            new in 0.0..=1.0f64,
        ) {
            let a = regularize(&f, 4).unwrap();
            let mut g = f.clone();
            g[j] = new;
            let b = regularize(&g, 4).unwrap();
            for i in (0..15).filter(|&i| i != j) {
                prop_assert_eq!(a.amplitudes[i].to_bits(), b.amplitudes[i].to_bits());
            }
        }

        #[test]
        fn z_to_unit_is_monotone(a in -1.0..=1.0f64, b in -1.0..=1.0f64) {
            if a < b {
                prop_assert!(z_to_unit(a) <= z_to_unit(b));
            }
        }
    }
}
