use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::error::{ensure, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl Add for Complex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Iterative radix-2 forward FFT with precomputed twiddles.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        ensure!(n.is_power_of_two() && n >= 2, "FFT size must be a power of two, got {n}");
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
    pub fn forward(&self, buf: &mut [Complex]) {
        assert_eq!(buf.len(), self.n, "FFT buffer length");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let step = self.n / size;
            for start in (0..self.n).step_by(size) {
                for k in 0..half {
                    let t = buf[start + k + half] * self.twiddles[k * step];
                    let u = buf[start + k];
                    buf[start + k] = u + t;
                    buf[start + k + half] = u - t;
                }
            }
            size *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn matches_naive_dft() {
        let n = 64;
        let fft = Fft::new(n).unwrap();
        let mut rng = SeededRng::new(3, 0);
        let x: Vec<Complex> = (0..n).map(|_| Complex::new(rng.normal(), rng.normal())).collect();
        let mut y = x.clone();
        fft.forward(&mut y);
        for k in 0..n {
            let mut acc = Complex::default();
            for (i, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * i) as f64 / n as f64;
                acc = acc + *v * Complex::new(libm::cos(a), libm::sin(a));
            }
            assert!((acc - y[k]).norm_sqr().sqrt() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft::new(12).is_err());
    }
}
