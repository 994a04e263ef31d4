//! One-vs-rest kernel SVM trained by SMO with second-order working-set
//! selection.

use alloc::vec;
use alloc::vec::Vec;

use super::elm::argmax;
use super::Matrix;
use crate::error::{ensure, Error, Result};

/// KKT violation tolerance.
pub const SMO_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                libm::exp(-gamma * d2)
            }
        }
    }
}

/// Symmetric Gram matrix of the training rows.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub kernel: Kernel,
    n: usize,
    k: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(x: &Matrix, kernel: Kernel) -> Self {
        Self::linear(x).with_kernel(kernel)
    }

    /// `X·Xᵀ`, made exactly symmetric.
    pub fn linear(x: &Matrix) -> Self {
        let n = x.rows();
        let g = x.matmul_t(x).expect("shapes agree");
        let mut k = g.data().to_vec();
        for i in 0..n {
            for j in 0..i {
                k[j * n + i] = k[i * n + j];
            }
        }
        Self { kernel: Kernel::Linear, n, k }
    }

    /// Derives another kernel from a linear Gram matrix, using
    /// `‖a − b‖² = ‖a‖² + ‖b‖² − 2a·b`.
    pub fn with_kernel(&self, kernel: Kernel) -> Self {
        assert_eq!(self.kernel, Kernel::Linear, "derive kernels from the linear Gram matrix");
        let n = self.n;
        match kernel {
            Kernel::Linear => self.clone(),
            Kernel::Rbf { gamma } => {
                let mut k = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..=i {
                        let d2 = (self.get(i, i) + self.get(j, j) - 2.0 * self.get(i, j)).max(0.0);
                        let v = if i == j { 1.0 } else { libm::exp(-gamma * d2) };
                        k[i * n + j] = v;
                        k[j * n + i] = v;
                    }
                }
                Self { kernel, n, k }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.k[i * self.n..(i + 1) * self.n]
    }
}

/// Dual solution of one binary problem with targets `y ∈ {−1, +1}`.
#[derive(Clone, Debug)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

/// Solves `min ½αᵀQα − Σα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0`, `Q_ij = y_i y_j K_ij`.
pub fn solve_binary(k: &KernelMatrix, y: &[f64], c: f64) -> Result<BinarySolution> {
    let n = k.len();
    ensure!(y.len() == n, "{} targets for a {n}x{n} kernel", y.len());
    ensure!(c > 0.0 && c.is_finite(), "C must be positive, got {c}");
    ensure!(
        y.iter().any(|&t| t > 0.0) && y.iter().any(|&t| t < 0.0),
        "binary problem needs both classes"
    );
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let stall_limit = 10 * n;
    let hard_cap = (100 * n).max(10_000_000);
    let mut objective = 0.0;
    let mut stalled = 0;
    let mut iterations = 0;
    loop {
        let Some((i, j)) = select_working_set(k, y, &alpha, &grad, c) else {
            break;
        };
        iterations += 1;
        if iterations > hard_cap {
            return Err(Error::NoConvergence(alloc::format!("SMO hit {hard_cap} iterations")));
        }
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        update_pair(k, y, &mut alpha, &grad, c, i, j);
        let (di, dj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        let (ki, kj) = (k.row(i), k.row(j));
        let mut delta_obj = 0.0;
        // ½ΔᵀQΔ + Δᵀ∇ evaluated before the gradient moves.
        let qii = ki[i];
        let qjj = kj[j];
        let qij = y[i] * y[j] * ki[j];
        delta_obj += 0.5 * (di * di * qii + dj * dj * qjj) + di * dj * qij + di * grad[i] + dj * grad[j];
        for t in 0..n {
            grad[t] += y[t] * (y[i] * di * ki[t] + y[j] * dj * kj[t]);
        }
        objective += delta_obj;
        if delta_obj < -1e-15 * (1.0 + libm::fabs(objective)) {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= stall_limit {
                break;
            }
        }
    }
    let rho = compute_rho(y, &alpha, &grad, c);
    Ok(BinarySolution { alpha, y: y.to_vec(), rho, iterations })
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

fn select_working_set(k: &KernelMatrix, y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> Option<(usize, usize)> {
    let n = y.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut i = usize::MAX;
    for t in 0..n {
        if in_up(y[t], alpha[t], c) {
            let v = -y[t] * grad[t];
            if v > gmax {
                gmax = v;
                i = t;
            }
        }
    }
    if i == usize::MAX {
        return None;
    }
    let ki = k.row(i);
    let mut gmin = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut j = usize::MAX;
    for t in 0..n {
        if !in_low(y[t], alpha[t], c) {
            continue;
        }
        let v = -y[t] * grad[t];
        gmin = gmin.min(v);
        let b = gmax - v;
        if b > 0.0 {
            let mut a = ki[i] + k.get(t, t) - 2.0 * ki[t];
            if a <= 0.0 {
                a = TAU;
            }
            let score = -(b * b) / a;
            if score < best {
                best = score;
                j = t;
            }
        }
    }
    if gmax - gmin < SMO_TOLERANCE || j == usize::MAX {
        None
    } else {
        Some((i, j))
    }
}

/// Analytic two-variable step, clipped to the box.
fn update_pair(k: &KernelMatrix, y: &[f64], alpha: &mut [f64], grad: &[f64], c: f64, i: usize, j: usize) {
    let kij = k.get(i, j);
    let mut quad = k.get(i, i) + k.get(j, j) - 2.0 * kij;
    if quad <= 0.0 {
        quad = TAU;
    }
    let (ai, aj) = (alpha[i], alpha[j]);
    if y[i] != y[j] {
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = ai - aj;
        let (mut ni, mut nj) = (ai + delta, aj + delta);
        if diff > 0.0 {
            if nj < 0.0 {
                nj = 0.0;
                ni = diff;
            }
        } else if ni < 0.0 {
            ni = 0.0;
            nj = -diff;
        }
        if diff > 0.0 {
            if ni > c {
                ni = c;
                nj = c - diff;
            }
        } else if nj > c {
            nj = c;
            ni = c + diff;
        }
        alpha[i] = ni;
        alpha[j] = nj;
    } else {
        let delta = (grad[i] - grad[j]) / quad;
        let sum = ai + aj;
        let (mut ni, mut nj) = (ai - delta, aj + delta);
        if sum > c {
            if ni > c {
                ni = c;
                nj = sum - c;
            }
        } else if nj < 0.0 {
            nj = 0.0;
            ni = sum;
        }
        if sum > c {
            if nj > c {
                nj = c;
                ni = sum - c;
            }
        } else if ni < 0.0 {
            ni = 0.0;
            nj = sum;
        }
        alpha[i] = ni;
        alpha[j] = nj;
    }
}

fn compute_rho(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Trained one-vs-rest model. Support vectors are shared by all classes;
/// `coef[c][s]` is `α·y` of support vector `s` in the problem for class `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support: Matrix,
    pub coef: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

impl SvmModel {
    pub fn train(x: &Matrix, labels: &[usize], classes: usize, kernel: Kernel, c: f64) -> Result<Self> {
        let k = KernelMatrix::new(x, kernel);
        Self::train_with_kernel(x, &k, labels, classes, c)
    }

    /// Reuses a precomputed Gram matrix of `x`.
    pub fn train_with_kernel(x: &Matrix, k: &KernelMatrix, labels: &[usize], classes: usize, c: f64) -> Result<Self> {
        Ok(Self::from_solutions(x, k.kernel, c, &Self::solve_all(k, labels, classes, c)?))
    }

    /// Binary dual solutions, one per class.
    pub fn solve_all(k: &KernelMatrix, labels: &[usize], classes: usize, c: f64) -> Result<Vec<BinarySolution>> {
        ensure!(labels.len() == k.len(), "{} labels for {} training rows", labels.len(), k.len());
        ensure!(labels.iter().all(|&l| l < classes), "label out of range for {classes} classes");
        let present = (0..classes).filter(|c| labels.contains(c)).count();
        ensure!(present >= 2, "svm needs at least two classes, found {present}");
        (0..classes)
            .map(|cls| {
                let y: Vec<f64> = labels.iter().map(|&l| if l == cls { 1.0 } else { -1.0 }).collect();
                if y.iter().all(|&t| t < 0.0) {
                    // Class absent from training: never predicted.
                    return Ok(BinarySolution { alpha: vec![0.0; y.len()], y, rho: f64::INFINITY, iterations: 0 });
                }
                solve_binary(k, &y, c)
            })
            .collect()
    }

    pub fn from_solutions(x: &Matrix, kernel: Kernel, c: f64, sols: &[BinarySolution]) -> Self {
        let sv: Vec<usize> = (0..x.rows()).filter(|&i| sols.iter().any(|s| s.alpha[i] > 0.0)).collect();
        let coef = sols.iter().map(|s| sv.iter().map(|&i| s.alpha[i] * s.y[i]).collect()).collect();
        Self { kernel, c, support: x.select_rows(&sv), coef, rho: sols.iter().map(|s| s.rho).collect() }
    }

    pub fn classes(&self) -> usize {
        self.rho.len()
    }

    pub fn dim(&self) -> usize {
        self.support.cols()
    }

    pub fn decision_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure!(x.len() == self.dim(), "svm expects {} features, got {}", self.dim(), x.len());
        let kv: Vec<f64> = (0..self.support.rows()).map(|s| self.kernel.eval(self.support.row(s), x)).collect();
        Ok(self
            .coef
            .iter()
            .zip(&self.rho)
            .map(|(coef, rho)| coef.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>() - rho)
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        (0..x.rows()).map(|i| Ok(argmax(&self.decision_row(x.row(i))?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn blobs(seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = SeededRng::new(seed, 1);
        let centers = [(-4.0, 0.0), (4.0, 1.0), (0.0, 6.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..20 {
                rows.push([cx + 0.5 * rng.normal(), cy + 0.5 * rng.normal()]);
                labels.push(c);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    fn check_feasible(sols: &[BinarySolution], c: f64) {
        for s in sols {
            assert!(s.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            let sum: f64 = s.alpha.iter().zip(&s.y).map(|(a, y)| a * y).sum();
            assert!(libm::fabs(sum) < 1e-6, "sum {sum}");
        }
    }

    #[test]
    fn separable_blobs_linear() {
        let (x, l) = blobs(3);
        let k = KernelMatrix::new(&x, Kernel::Linear);
        let sols = SvmModel::solve_all(&k, &l, 3, 32.0).unwrap();
        check_feasible(&sols, 32.0);
        let m = SvmModel::from_solutions(&x, Kernel::Linear, 32.0, &sols);
        assert_eq!(m.predict(&x).unwrap(), l);
    }

    #[test]
    fn xor_rbf() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let l = [0, 0, 1, 1];
        let k = KernelMatrix::new(&x, Kernel::Rbf { gamma: 1.0 });
        let sols = SvmModel::solve_all(&k, &l, 2, 8.0).unwrap();
        check_feasible(&sols, 8.0);
        assert_eq!(SvmModel::from_solutions(&x, k.kernel, 8.0, &sols).predict(&x).unwrap(), l);
    }

    #[test]
    fn kkt_conditions_hold_at_solution() {
        let (x, l) = blobs(8);
        let k = KernelMatrix::new(&x, Kernel::Rbf { gamma: 0.1 });
        let sols = SvmModel::solve_all(&k, &l, 3, 2.0).unwrap();
        for s in &sols {
            // y_i f(x_i) ≥ 1 − tol off the upper bound, ≤ 1 + tol above zero.
            for i in 0..x.rows() {
                let f: f64 = (0..x.rows()).map(|t| s.alpha[t] * s.y[t] * k.get(t, i)).sum::<f64>() - s.rho;
                let m = s.y[i] * f;
                if s.alpha[i] < 2.0 {
                    assert!(m >= 1.0 - 2e-3, "margin {m}");
                }
                if s.alpha[i] > 0.0 {
                    assert!(m <= 1.0 + 2e-3, "margin {m}");
                }
            }
        }
    }

    #[test]
    fn zero_coefficient_duplicate_does_not_change_decisions() {
        let (x, l) = blobs(5);
        let m = SvmModel::train(&x, &l, 3, Kernel::Rbf { gamma: 0.5 }, 8.0).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..m.support.rows()).map(|i| m.support.row(i).to_vec()).collect();
        rows.push(m.support.row(0).to_vec());
        let mut dup = m.clone();
        dup.support = Matrix::from_rows(&rows).unwrap();
        dup.coef.iter_mut().for_each(|c| c.push(0.0));
        for i in 0..x.rows() {
            assert_eq!(m.decision_row(x.row(i)).unwrap(), dup.decision_row(x.row(i)).unwrap());
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(SvmModel::train(&x, &[1, 1], 2, Kernel::Linear, 1.0).is_err());
    }
}
