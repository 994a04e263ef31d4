use alloc::vec::Vec;

use super::Matrix;
use crate::error::{ensure, Result};

/// Per-dimension z-scoring learned from training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, or 1 for constant columns.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        ensure!(x.rows() > 0, "cannot fit a standardizer on zero rows");
        let n = x.rows() as f64;
        let mut mean = alloc::vec![0.0; x.cols()];
        for i in 0..x.rows() {
            mean.iter_mut().zip(x.row(i)).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = libm::sqrt(s / n);
                // Rounding noise on a constant column must not blow up.
                if sd <= 1e-12 * (1.0 + libm::fabs(*m)) { 1.0 } else { sd }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        ensure!(x.cols() == self.dim(), "standardizer fitted on {} dims, got {}", self.dim(), x.cols());
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.apply_row(out.row_mut(i));
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }

    /// Order-sensitive FNV-1a digest of the parameters' bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.mean.iter().chain(&self.scale) {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
