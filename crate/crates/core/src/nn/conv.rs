use alloc::vec;
#[cfg(test)]
use alloc::vec::Vec;

use super::{FilterBank, Padding, Tensor};
use crate::error::{ensure, invalid, Result};

/// Upper bound on the im2col scratch buffer, in floats.
const COLUMN_BUDGET: usize = 1 << 22;

/// Output length and left padding along one axis.
pub fn output_len(len: usize, k: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    ensure!(k >= 1 && stride >= 1, "kernel extent and stride must be positive");
    match padding {
        Padding::Valid => {
            if k > len {
                invalid!("kernel of extent {k} exceeds input extent {len} under valid padding");
            }
            Ok(((len - k) / stride + 1, 0))
        }
        Padding::Same => {
            let out = len.div_ceil(stride);
            let total = ((out - 1) * stride + k).saturating_sub(len);
            Ok((out, total / 2))
        }
    }
}

/// 1D cross-correlation along time. Requires `freq == 1` tensors and filters.
pub fn conv1d(x: &Tensor, f: &FilterBank) -> Result<Tensor> {
    ensure!(x.freq() == 1, "conv1d expects a 1D tensor, got freq extent {}", x.freq());
    ensure!(f.shape.k_freq == 1, "conv1d expects 1D filters");
    conv(x, f)
}

/// 2D cross-correlation over `(time, freq)` with per-axis stride and padding.
pub fn conv2d(x: &Tensor, f: &FilterBank) -> Result<Tensor> {
    conv(x, f)
}

fn conv(x: &Tensor, f: &FilterBank) -> Result<Tensor> {
    let s = f.shape;
    ensure!(
        x.channels() == s.in_channels,
        "input has {} channels, filters expect {}",
        x.channels(),
        s.in_channels
    );
    let (st, sf) = f.stride;
    let (t_out, pad_t) = output_len(x.time(), s.k_time, st, f.padding.0)?;
    let (f_out, pad_f) = output_len(x.freq(), s.k_freq, sf, f.padding.1)?;
    let positions = t_out * f_out;
    let k = s.in_channels * s.k_time * s.k_freq;
    let mut out = vec![0.0f32; s.out_channels * positions];

    let rows_per_tile = (COLUMN_BUDGET / (k * f_out)).clamp(1, t_out);
    let mut cols = vec![0.0f32; k * rows_per_tile * f_out];
    let plane = x.plane();
    let src = x.data();
    let (t_in, f_in) = (x.time() as isize, x.freq() as isize);

    let mut t0 = 0;
    while t0 < t_out {
        let t1 = (t0 + rows_per_tile).min(t_out);
        let width = (t1 - t0) * f_out;
        let cols = &mut cols[..k * width];
        let mut r = 0;
        for i in 0..s.in_channels {
            let chan = &src[i * plane..(i + 1) * plane];
            for jt in 0..s.k_time {
                for jf in 0..s.k_freq {
                    let dst = &mut cols[r * width..(r + 1) * width];
                    for (row, t) in (t0..t1).enumerate() {
                        let d = &mut dst[row * f_out..(row + 1) * f_out];
                        let ti = (t * st + jt) as isize - pad_t as isize;
                        if ti < 0 || ti >= t_in {
                            d.fill(0.0);
                            continue;
                        }
                        let line = &chan[ti as usize * f_in as usize..(ti as usize + 1) * f_in as usize];
                        let offset = jf as isize - pad_f as isize;
                        if sf == 1 && offset >= 0 && offset + f_out as isize <= f_in {
                            d.copy_from_slice(&line[offset as usize..offset as usize + f_out]);
                        } else {
                            for (fo, v) in d.iter_mut().enumerate() {
                                let fi = (fo * sf) as isize + offset;
                                *v = if fi >= 0 && fi < f_in { line[fi as usize] } else { 0.0 };
                            }
                        }
                    }
                    r += 1;
                }
            }
        }
        let c_off = t0 * f_out;
        assert!(f.weights.len() == s.out_channels * k);
        assert!(cols.len() == k * width);
        assert!((s.out_channels - 1) * positions + c_off + width <= out.len());
        // SAFETY: the asserts above bound every index the kernel touches:
        // A is out_channels x k (row stride k), B is k x width (row stride
        // width) and C addresses rows of `positions` starting at `c_off`.
        unsafe {
            matrixmultiply::sgemm(
                s.out_channels,
                k,
                width,
                1.0,
                f.weights.as_ptr(),
                k as isize,
                1,
                cols.as_ptr(),
                width as isize,
                1,
                0.0,
                out.as_mut_ptr().add(c_off),
                positions as isize,
                1,
            );
        }
        t0 = t1;
    }

    for (o, chunk) in out.chunks_exact_mut(positions).enumerate() {
        let b = f.bias[o];
        if b != 0.0 {
            chunk.iter_mut().for_each(|v| *v += b);
        }
    }
    Tensor::new(out, s.out_channels, t_out, f_out)
}

/// Direct nested-loop reference used by tests.
#[cfg(test)]
pub(crate) fn conv_reference(x: &Tensor, f: &FilterBank) -> Tensor {
    let s = f.shape;
    let (t_out, pad_t) = output_len(x.time(), s.k_time, f.stride.0, f.padding.0).unwrap();
    let (f_out, pad_f) = output_len(x.freq(), s.k_freq, f.stride.1, f.padding.1).unwrap();
    let mut out = Vec::with_capacity(s.out_channels * t_out * f_out);
    for o in 0..s.out_channels {
        for t in 0..t_out {
            for q in 0..f_out {
                let mut acc = f.bias[o] as f64;
                for i in 0..s.in_channels {
                    let kern = f.kernel(o, i);
                    for jt in 0..s.k_time {
                        for jf in 0..s.k_freq {
                            let ti = (t * f.stride.0 + jt) as isize - pad_t as isize;
                            let fi = (q * f.stride.1 + jf) as isize - pad_f as isize;
                            if ti >= 0 && fi >= 0 && (ti as usize) < x.time() && (fi as usize) < x.freq() {
                                acc += kern[jt * s.k_freq + jf] as f64
                                    * x.get(i, ti as usize, fi as usize) as f64;
                            }
                        }
                    }
                }
                out.push(acc as f32);
            }
        }
    }
    Tensor::new(out, s.out_channels, t_out, f_out).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_filters, FilterShape};
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn bank(shape: FilterShape, w: Vec<f32>) -> FilterBank {
        FilterBank::new(shape, w, vec![0.0; shape.out_channels]).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let x = Tensor::new_1d(vec![1.0, -2.0, 3.5, 0.25, 7.0], 1, 5).unwrap();
        let f = bank(FilterShape::new_1d(1, 1, 3), vec![0.0, 1.0, 0.0])
            .with_padding(Padding::Same, Padding::Valid);
        assert_eq!(conv1d(&x, &f).unwrap(), x);
    }

    #[test]
    fn box_kernel_valid() {
        let x = Tensor::new_1d(vec![1.0, 2.0, 3.0, 4.0], 1, 4).unwrap();
        let f = bank(FilterShape::new_1d(1, 1, 2), vec![1.0, 1.0]);
        assert_eq!(conv1d(&x, &f).unwrap().data(), &[3.0, 5.0, 7.0]);
    }

    #[test]
    fn frame_level_length() {
        assert_eq!(output_len(350_000, 512, 32, Padding::Valid).unwrap().0, 10_922);
        assert_eq!(output_len(350_000, 512, 32, Padding::Same).unwrap().0, 10_938);
        assert!(output_len(3, 4, 1, Padding::Valid).is_err());
    }

    #[test]
    fn kernel_longer_than_input_rejected() {
        let x = Tensor::new_1d(vec![1.0; 3], 1, 3).unwrap();
        let f = bank(FilterShape::new_1d(1, 1, 4), vec![1.0; 4]);
        assert!(conv1d(&x, &f).is_err());
    }

    #[test]
    fn unit_2d_kernel_is_identity() {
        let mut rng = SeededRng::new(1, 1);
        let x = Tensor::new((0..30).map(|_| rng.normal() as f32).collect(), 1, 5, 6).unwrap();
        let f = bank(FilterShape::new_2d(1, 1, 1, 1), vec![1.0]);
        assert_eq!(conv2d(&x, &f).unwrap(), x);
    }

    #[test]
    fn vertical_7x86_shape() {
        let x = Tensor::zeros(1, 1376, 96).unwrap();
        let f = init_filters(FilterShape::new_2d(2, 1, 7, 86), &mut SeededRng::new(0, 0))
            .unwrap()
            .with_padding(Padding::Same, Padding::Valid);
        assert_eq!(conv2d(&x, &f).unwrap().shape(), (2, 1376, 11));
    }

    #[test]
    fn random_3x3_matches_reference() {
        let mut rng = SeededRng::new(8, 8);
        let x = Tensor::new((0..30).map(|_| rng.normal() as f32).collect(), 1, 5, 6).unwrap();
        let f = init_filters(FilterShape::new_2d(1, 1, 3, 3), &mut rng).unwrap();
        let got = conv2d(&x, &f).unwrap();
        let want = conv_reference(&x, &f);
        assert_eq!(got.shape(), (1, 3, 4));
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
        }
    }

    fn padding() -> impl Strategy<Value = Padding> {
        prop_oneof![Just(Padding::Valid), Just(Padding::Same)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_nested_loops(
            cin in 1usize..4, cout in 1usize..5,
            t in 1usize..24, fr in 1usize..10,
            kt in 1usize..6, kf in 1usize..5,
            st in 1usize..4, sf in 1usize..3,
            pt in padding(), pf in padding(),
            seed in any::<u64>(),
        ) {
            prop_assume!(pt == Padding::Same || kt <= t);
            prop_assume!(pf == Padding::Same || kf <= fr);
            let mut rng = SeededRng::new(seed, 0);
            let x = Tensor::new((0..cin * t * fr).map(|_| rng.normal() as f32).collect(), cin, t, fr).unwrap();
            let mut f = init_filters(FilterShape::new_2d(cout, cin, kt, kf), &mut rng).unwrap()
                .with_stride(st, sf)
                .with_padding(pt, pf);
            f.bias.iter_mut().for_each(|b| *b = rng.normal() as f32);
            let got = conv2d(&x, &f).unwrap();
            let want = conv_reference(&x, &f);
            prop_assert_eq!(got.shape(), want.shape());
            let (to, _) = output_len(t, kt, st, pt).unwrap();
            let (fo, _) = output_len(fr, kf, sf, pf).unwrap();
            prop_assert_eq!(got.shape(), (cout, to, fo));
            for (a, b) in got.data().iter().zip(want.data()) {
                prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{} vs {}", a, b);
            }
        }

        #[test]
        fn same_padding_length_formula(len in 1usize..5000, k in 1usize..600, s in 1usize..40) {
            let (out, left) = output_len(len, k, s, Padding::Same).unwrap();
            prop_assert_eq!(out, len.div_ceil(s));
            prop_assert!(left <= k / 2);
        }
    }
}
