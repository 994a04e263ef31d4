//! Extreme learning machine: frozen random ReLU layer, output weights by
//! pseudoinverse.

use alloc::vec::Vec;

use super::{pseudoinverse, Matrix};
use crate::error::{ensure, Result};
use crate::rng::SeededRng;

const W1_STREAM: u64 = 0x454c_4d00;

#[derive(Clone, Debug, PartialEq)]
pub struct ElmModel {
    /// `hidden × (dim + 1)`; the last column multiplies the constant 1.
    pub w1: Matrix,
    /// `hidden × classes`.
    pub w2: Matrix,
    pub seed: u64,
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One-hot `n × classes` targets.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Matrix> {
    let mut y = Matrix::zeros(labels.len(), classes);
    for (i, &l) in labels.iter().enumerate() {
        ensure!(l < classes, "label {l} at row {i} out of range for {classes} classes");
        y[(i, l)] = 1.0;
    }
    Ok(y)
}

impl ElmModel {
    /// Random input weights for `hidden` units over `dim` features.
    pub fn random_layer(dim: usize, hidden: usize, seed: u64) -> Result<Matrix> {
        ensure!(hidden > 0 && dim > 0, "elm needs hidden > 0 and dim > 0");
        let mut rng = SeededRng::new(seed, W1_STREAM);
        let data = (0..hidden * (dim + 1)).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        Matrix::new(hidden, dim + 1, data)
    }

    /// `relu([x, 1] · W1ᵀ)`, one row per sample.
    pub fn hidden_activations(w1: &Matrix, x: &Matrix) -> Result<Matrix> {
        ensure!(x.cols() + 1 == w1.cols(), "elm expects {} features, got {}", w1.cols() - 1, x.cols());
        let mut h = Matrix::zeros(x.rows(), w1.rows());
        for i in 0..x.rows() {
            hidden_row(w1, x.row(i), h.row_mut(i));
        }
        Ok(h)
    }

    /// Fits against `y` (`n × classes`, typically one-hot).
    pub fn fit(x: &Matrix, y: &Matrix, hidden: usize, seed: u64) -> Result<Self> {
        ensure!(x.rows() == y.rows(), "{} feature rows but {} target rows", x.rows(), y.rows());
        ensure!(x.is_finite() && y.is_finite(), "elm inputs must be finite");
        let present = (0..y.cols()).filter(|&c| (0..y.rows()).any(|i| y[(i, c)] != 0.0)).count();
        ensure!(present >= 2, "elm needs targets from at least two classes, found {present}");
        let w1 = Self::random_layer(x.cols(), hidden, seed)?;
        let h = Self::hidden_activations(&w1, x)?;
        let w2 = pseudoinverse(&h)?.matmul(y)?;
        Ok(Self { w1, w2, seed })
    }

    pub fn fit_labels(x: &Matrix, labels: &[usize], classes: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::fit(x, &one_hot(labels, classes)?, hidden, seed)
    }

    pub fn dim(&self) -> usize {
        self.w1.cols() - 1
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    pub fn classes(&self) -> usize {
        self.w2.cols()
    }

    /// Class scores of one sample.
    pub fn scores_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure!(x.len() == self.dim(), "elm expects {} features, got {}", self.dim(), x.len());
        let mut h = alloc::vec![0.0; self.hidden()];
        hidden_row(&self.w1, x, &mut h);
        let mut out = alloc::vec![0.0; self.classes()];
        for (k, &hk) in h.iter().enumerate() {
            if hk != 0.0 {
                out.iter_mut().zip(self.w2.row(k)).for_each(|(o, w)| *o += hk * w);
            }
        }
        Ok(out)
    }

    /// Scores for every row; each row is computed exactly as
    /// [`scores_row`](Self::scores_row) would.
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.rows(), self.classes());
        for i in 0..x.rows() {
            out.row_mut(i).copy_from_slice(&self.scores_row(x.row(i))?);
        }
        Ok(out)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        (0..x.rows()).map(|i| Ok(argmax(&self.scores_row(x.row(i))?))).collect()
    }
}

fn hidden_row(w1: &Matrix, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        let w = w1.row(k);
        let mut acc = w[d];
        for (a, b) in w[..d].iter().zip(x) {
            acc += a * b;
        }
        *o = if acc > 0.0 { acc } else { 0.0 };
    }
}
