//! Dense `f64` matrices, thin SVD and the Moore-Penrose pseudoinverse.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};

/// Relative cutoff below which singular values are treated as zero.
pub const PINV_RCOND: f64 = 1e-6;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            data.len() == rows * cols,
            "matrix storage has {} values, shape {rows}x{cols} needs {}",
            data.len(),
            rows * cols
        );
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            ensure!(r.as_ref().len() == cols, "row {i} has {} values, expected {cols}", r.as_ref().len());
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Rows of `f32` features widened to `f64`.
    pub fn from_f32_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            ensure!(r.as_ref().len() == cols, "row {i} has {} values, expected {cols}", r.as_ref().len());
            data.extend(r.as_ref().iter().map(|&v| v as f64));
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.cols == other.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(self, false, other, false, &mut out);
        Ok(out)
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.cols == other.cols,
            "cannot multiply {}x{} by the transpose of {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.rows);
        gemm(self, false, other, true, &mut out);
        Ok(out)
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.rows == other.rows,
            "cannot multiply the transpose of {}x{} by {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = Matrix::zeros(self.cols, other.cols);
        gemm(self, true, other, false, &mut out);
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn gemm(a: &Matrix, ta: bool, b: &Matrix, tb: bool, c: &mut Matrix) {
    let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let n = if tb { b.rows } else { b.cols };
    debug_assert_eq!((c.rows, c.cols), (m, n));
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.data.fill(0.0);
        return;
    }
    let (rsa, csa) = if ta { (1, a.cols as isize) } else { (a.cols as isize, 1) };
    let (rsb, csb) = if tb { (1, b.cols as isize) } else { (b.cols as isize, 1) };
    // SAFETY: strides and extents describe exactly the storage of `a`, `b`
    // and `c`, checked by the callers' shape assertions above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            0.0,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(rows, cols)` singular values in
/// descending order. `u` is `rows × k`, `v` is `cols × k`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Householder QR of a tall matrix followed by one-sided Jacobi on `R`.
pub fn svd(a: &Matrix) -> Result<Svd> {
    ensure!(a.is_finite(), "matrix has non-finite entries");
    if a.rows < a.cols {
        let Svd { u, s, v } = svd(&a.transpose())?;
        return Ok(Svd { u: v, s, v: u });
    }
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Ok(Svd { u: Matrix::zeros(m, 0), s: Vec::new(), v: Matrix::zeros(0, 0) });
    }
    let (q, r) = householder_qr(a);
    // Columns of `w` (stored as rows of `wt`) converge to U_r·diag(s).
    let mut wt = r.transpose();
    let mut vt = Matrix::identity(n);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (wt.row(p), wt.row(q));
                    let mut a2 = 0.0;
                    let mut b2 = 0.0;
                    let mut g = 0.0;
                    for (x, y) in wp.iter().zip(wq) {
                        a2 += x * x;
                        b2 += y * y;
                        g += x * y;
                    }
                    (a2, b2, g)
                };
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut wt, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(alloc::format!(
            "one-sided Jacobi SVD of a {m}x{n} matrix after {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let mut order: Vec<(f64, usize)> =
        (0..n).map(|j| (libm::sqrt(wt.row(j).iter().map(|x| x * x).sum()), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut ur = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        for i in 0..n {
            ur[(i, k)] = if sigma > 0.0 { wt[(j, i)] / sigma } else { 0.0 };
            v[(i, k)] = vt[(j, i)];
        }
    }
    let u = q.matmul(&ur)?;
    Ok(Svd { u, s, v })
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    let (head, tail) = m.data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Thin QR of an `m × n` matrix, `m ≥ n`: returns `Q` (`m × n`) and `R`
/// (`n × n`, upper triangular).
fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = (a.rows, a.cols);
    // Column-major working copy: column j at data[j*m..].
    let mut cols = a.transpose();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let x = &cols.row(j)[j..];
        let norm = libm::sqrt(x.iter().map(|v| v * v).sum());
        let mut v: Vec<f64> = x.to_vec();
        if norm == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let alpha = -libm::copysign(norm, x[0]);
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let inv = 1.0 / libm::sqrt(vnorm2);
        v.iter_mut().for_each(|t| *t *= inv);
        for k in j..n {
            let col = &mut cols.row_mut(k)[j..];
            let d: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(&v).for_each(|(a, b)| *a -= 2.0 * d * b);
        }
        vs.push(v);
    }
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            r[(i, j)] = cols[(j, i)];
        }
    }
    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut qt = Matrix::zeros(n, m);
    for k in 0..n {
        qt[(k, k)] = 1.0;
    }
    for j in (0..n).rev() {
        let v = &vs[j];
        if v.is_empty() {
            continue;
        }
        for k in 0..n {
            let col = &mut qt.row_mut(k)[j..];
            let d: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            if d != 0.0 {
                col.iter_mut().zip(v).for_each(|(a, b)| *a -= 2.0 * d * b);
            }
        }
    }
    (qt.transpose(), r)
}

/// Moore-Penrose pseudoinverse via SVD, zeroing singular values below
/// [`PINV_RCOND`]` · σ_max`.
pub fn pseudoinverse(a: &Matrix) -> Result<Matrix> {
    pseudoinverse_rcond(a, PINV_RCOND)
}

pub fn pseudoinverse_rcond(a: &Matrix, rcond: f64) -> Result<Matrix> {
    ensure!(a.is_finite(), "pseudoinverse of a matrix with non-finite entries");
    let Svd { u, s, v } = svd(a)?;
    let cutoff = rcond * s.first().copied().unwrap_or(0.0);
    // V diag(1/s) Uᵀ, built as (V diag(1/s)) * Uᵀ.
    let mut vs = v;
    for i in 0..vs.rows {
        for (k, &sigma) in s.iter().enumerate() {
            vs[(i, k)] = if sigma > cutoff && sigma > 0.0 { vs[(i, k)] / sigma } else { 0.0 };
        }
    }
    vs.matmul_t(&u)
}
