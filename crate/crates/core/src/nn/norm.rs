use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::error::{ensure, Result};

/// Added to the batch standard deviation before dividing.
pub const BN_EPSILON: f64 = 1e-5;

/// Normalizes each dimension by the statistics of the batch it belongs to:
/// `(x - mean) / (std + 1e-5)` with the population standard deviation.
///
/// Every output depends on every other member of the batch.
pub fn batch_stat_normalize(batch: &[Vec<f32>]) -> Result<Vec<Vec<f32>>> {
    ensure!(batch.len() >= 2, "batch statistics need at least 2 vectors, got {}", batch.len());
    let dim = batch[0].len();
    ensure!(batch.iter().all(|v| v.len() == dim), "feature vectors in a batch differ in length");
    let n = batch.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for v in batch {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0f64; dim];
    for v in batch {
        for ((s, &x), m) in var.iter_mut().zip(v).zip(&mean) {
            let d = x as f64 - m;
            *s += d * d;
        }
    }
    let scale: Vec<f64> = var.iter().map(|s| 1.0 / (libm::sqrt(s / n) + BN_EPSILON)).collect();
    Ok(batch
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((&x, m), s)| ((x as f64 - m) * s) as f32)
                .collect()
        })
        .collect())
}

/// Per-channel `(mean, 1 / (std + 1e-5))` over all tensors in the batch and
/// all of their positions.
pub fn channel_stats(batch: &[Tensor]) -> Result<Vec<(f64, f64)>> {
    ensure!(!batch.is_empty(), "empty batch");
    let shape = batch[0].shape();
    ensure!(batch.iter().all(|t| t.shape() == shape), "tensors in a batch differ in shape");
    let count = (batch.len() * batch[0].plane()) as f64;
    Ok((0..shape.0)
        .map(|c| {
            let sum: f64 = batch.iter().map(|t| t.channel(c).iter().map(|&v| v as f64).sum::<f64>()).sum();
            let mean = sum / count;
            let ss: f64 = batch
                .iter()
                .map(|t| t.channel(c).iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>())
                .sum();
            (mean, 1.0 / (libm::sqrt(ss / count) + BN_EPSILON))
        })
        .collect())
}

/// Applies statistics from [`channel_stats`]. The map is monotone
/// non-decreasing per channel, so it commutes with max-pooling.
pub fn apply_channel_stats(t: &mut Tensor, stats: &[(f64, f64)]) -> Result<()> {
    ensure!(stats.len() == t.channels(), "{} channel stats for {} channels", stats.len(), t.channels());
    for (c, &(mean, scale)) in stats.iter().enumerate() {
        t.channel_mut(c).iter_mut().for_each(|v| *v = ((*v as f64 - mean) * scale) as f32);
    }
    Ok(())
}

/// Batch normalization of feature maps: every channel is normalized with
/// the mean and standard deviation taken over all tensors in the batch and
/// all of their positions.
pub fn batch_norm_channels(batch: &mut [Tensor]) -> Result<()> {
    let stats = channel_stats(batch)?;
    for t in batch.iter_mut() {
        apply_channel_stats(t, &stats)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_collapse_to_zero() {
        let out = batch_stat_normalize(&[vec![3.0, -1.0], vec![3.0, -1.0]]).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn two_point_batch() {
        let out = batch_stat_normalize(&[vec![0.0], vec![2.0]]).unwrap();
        let expect = 1.0 / (1.0 + 1e-5);
        assert!((out[0][0] as f64 + expect).abs() < 1e-7);
        assert!((out[1][0] as f64 - expect).abs() < 1e-7);
    }

    #[test]
    fn batch_membership_matters() {
        let a = vec![vec![0.0], vec![2.0], vec![4.0]];
        let b = vec![vec![0.0], vec![2.0], vec![10.0]];
        let na = batch_stat_normalize(&a).unwrap();
        assert_eq!(na, batch_stat_normalize(&a).unwrap());
        assert_ne!(na[1], batch_stat_normalize(&b).unwrap()[1]);
    }

    #[test]
    fn single_vector_rejected() {
        assert!(batch_stat_normalize(&[vec![1.0]]).is_err());
    }

    #[test]
    fn channel_norm_centers_each_channel() {
        let mut batch = vec![
            Tensor::new(vec![1.0, 2.0, 10.0, 20.0], 2, 2, 1).unwrap(),
            Tensor::new(vec![3.0, 4.0, 30.0, 40.0], 2, 2, 1).unwrap(),
        ];
        batch_norm_channels(&mut batch).unwrap();
        for c in 0..2 {
            let vals: Vec<f64> = batch.iter().flat_map(|t| t.channel(c).iter().map(|&v| v as f64)).collect();
            let mean = vals.iter().sum::<f64>() / 4.0;
            let var = vals.iter().map(|v| v * v).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }
}
