use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Result};
use crate::rng::SeededRng;

/// Border handling along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// No padding; output length `floor((L - k) / s) + 1`.
    Valid,
    /// Zero padding (extra element on the right); output length `ceil(L / s)`.
    Same,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterShape {
    pub out_channels: usize,
    pub in_channels: usize,
    pub k_time: usize,
    pub k_freq: usize,
}

impl FilterShape {
    pub fn new_1d(out_channels: usize, in_channels: usize, k_time: usize) -> Self {
        Self { out_channels, in_channels, k_time, k_freq: 1 }
    }

    pub fn new_2d(out_channels: usize, in_channels: usize, k_time: usize, k_freq: usize) -> Self {
        Self { out_channels, in_channels, k_time, k_freq }
    }

    pub fn receptive(&self) -> usize {
        self.k_time * self.k_freq
    }

    pub fn len(&self) -> usize {
        self.out_channels * self.in_channels * self.receptive()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Convolution weights `(out, in, k_time, k_freq)` plus bias, stride and padding.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub shape: FilterShape,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    /// `(time, freq)` strides.
    pub stride: (usize, usize),
    /// `(time, freq)` padding modes.
    pub padding: (Padding, Padding),
}

impl FilterBank {
    pub fn new(shape: FilterShape, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        ensure!(!shape.is_empty(), "zero-sized filter shape {shape:?}");
        ensure!(weights.len() == shape.len(), "expected {} weights, got {}", shape.len(), weights.len());
        ensure!(bias.len() == shape.out_channels, "expected {} biases", shape.out_channels);
        ensure!(weights.iter().all(|w| w.is_finite()), "non-finite filter weight");
        Ok(Self { shape, weights, bias, stride: (1, 1), padding: (Padding::Valid, Padding::Valid) })
    }

    pub fn with_stride(mut self, time: usize, freq: usize) -> Self {
        assert!(time >= 1 && freq >= 1, "strides must be positive");
        self.stride = (time, freq);
        self
    }

    pub fn with_padding(mut self, time: Padding, freq: Padding) -> Self {
        self.padding = (time, freq);
        self
    }

    /// The `k_time x k_freq` kernel connecting input `i` to output `o`.
    pub fn kernel(&self, o: usize, i: usize) -> &[f32] {
        let r = self.shape.receptive();
        let start = (o * self.shape.in_channels + i) * r;
        &self.weights[start..start + r]
    }
}

/// Glorot-uniform weights, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`,
/// and zero biases. Stride 1, valid padding.
pub fn init_filters(shape: FilterShape, rng: &mut SeededRng) -> Result<FilterBank> {
    ensure!(!shape.is_empty(), "zero-sized filter shape {shape:?}");
    let fan_in = (shape.in_channels * shape.receptive()) as f64;
    let fan_out = (shape.out_channels * shape.receptive()) as f64;
    let bound = libm::sqrt(6.0 / (fan_in + fan_out)) as f32;
    let weights = (0..shape.len()).map(|_| rng.symmetric_f32(bound)).collect();
    FilterBank::new(shape, weights, vec![0.0; shape.out_channels])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_stream() {
        let s = FilterShape::new_2d(4, 2, 3, 3);
        let a = init_filters(s, &mut SeededRng::new(9, 5)).unwrap();
        let b = init_filters(s, &mut SeededRng::new(9, 5)).unwrap();
        assert_eq!(a, b);
        let c = init_filters(s, &mut SeededRng::new(9, 6)).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn unit_shape_bound() {
        for seed in 0..200 {
            let f = init_filters(FilterShape::new_1d(1, 1, 1), &mut SeededRng::new(seed, 0)).unwrap();
            let w = f.weights[0];
            assert!(w > -(3.0f32).sqrt() && w < (3.0f32).sqrt());
            assert_eq!(f.bias, vec![0.0]);
        }
    }

    #[test]
    fn empirical_mean_near_zero() {
        // 10,000 draws with fan_in = fan_out = 50: a = sqrt(6 / 100).
        let f = init_filters(FilterShape::new_1d(200, 50, 1), &mut SeededRng::new(4, 4)).unwrap();
        let a = (0.06f64).sqrt();
        let n = f.weights.len() as f64;
        assert_eq!(n, 10_000.0);
        let mean = f.weights.iter().map(|&w| w as f64).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 * a / (3.0 * n).sqrt(), "mean {mean}");
        assert!(f.weights.iter().all(|&w| (w as f64).abs() < a));
    }

    #[test]
    fn zero_shape_rejected() {
        assert!(init_filters(FilterShape::new_1d(0, 1, 3), &mut SeededRng::new(0, 0)).is_err());
    }
}
