use super::Tensor;
use crate::error::{ensure, Result};

pub fn relu_inplace(x: &mut Tensor) {
    x.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// ELU with alpha 1: `x` for positive inputs, `exp(x) - 1` otherwise.
pub fn elu_inplace(x: &mut Tensor) {
    x.data_mut().iter_mut().for_each(|v| {
        if *v <= 0.0 {
            *v = libm::expm1f(*v);
        }
    });
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    relu_inplace(&mut y);
    y
}

pub fn elu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    elu_inplace(&mut y);
    y
}

/// Elementwise sum of two tensors of identical shape.
pub fn residual_add(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    ensure!(x.shape() == y.shape(), "residual shapes differ: {:?} vs {:?}", x.shape(), y.shape());
    let mut out = x.clone();
    out.data_mut().iter_mut().zip(y.data()).for_each(|(a, b)| *a += b);
    Ok(out)
}
