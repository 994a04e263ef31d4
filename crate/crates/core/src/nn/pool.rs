use alloc::vec::Vec;

use super::Tensor;
use crate::error::{ensure, Result};

fn pool(
    x: &Tensor,
    size: (usize, usize),
    stride: (usize, usize),
    reduce: impl Fn(&mut dyn Iterator<Item = f32>) -> f32,
) -> Result<Tensor> {
    let (c, t, f) = x.shape();
    ensure!(size.0 >= 1 && size.1 >= 1 && stride.0 >= 1 && stride.1 >= 1, "pool size and stride must be positive");
    ensure!(size.0 <= t && size.1 <= f, "pool {size:?} exceeds input extent {t}x{f}");
    let t_out = (t - size.0) / stride.0 + 1;
    let f_out = (f - size.1) / stride.1 + 1;
    let mut out = Vec::with_capacity(c * t_out * f_out);
    for ch in 0..c {
        let plane = x.channel(ch);
        for to in 0..t_out {
            for fo in 0..f_out {
                let (t0, f0) = (to * stride.0, fo * stride.1);
                let mut it = (t0..t0 + size.0)
                    .flat_map(|ti| plane[ti * f + f0..ti * f + f0 + size.1].iter().copied());
                out.push(reduce(&mut it));
            }
        }
    }
    Tensor::new(out, c, t_out, f_out)
}

/// Windowed maximum over `(time, freq)`; trailing partial windows are dropped.
pub fn max_pool(x: &Tensor, size: (usize, usize), stride: (usize, usize)) -> Result<Tensor> {
    pool(x, size, stride, |it| it.fold(f32::NEG_INFINITY, f32::max))
}

/// Windowed mean over `(time, freq)`; trailing partial windows are dropped.
pub fn mean_pool(x: &Tensor, size: (usize, usize), stride: (usize, usize)) -> Result<Tensor> {
    let n = (size.0 * size.1) as f32;
    pool(x, size, stride, |it| it.sum::<f32>() / n)
}

pub fn max_pool1d(x: &Tensor, size: usize, stride: usize) -> Result<Tensor> {
    max_pool(x, (size, 1), (stride, 1))
}

pub fn mean_pool1d(x: &Tensor, size: usize, stride: usize) -> Result<Tensor> {
    mean_pool(x, (size, 1), (stride, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn max_of_windows() {
        let x = Tensor::new_1d(vec![1.0, 3.0, 2.0, 5.0, 4.0, 0.0], 1, 6).unwrap();
        assert_eq!(max_pool1d(&x, 3, 3).unwrap().data(), &[3.0, 5.0]);
        assert_eq!(mean_pool1d(&x, 3, 3).unwrap().data(), &[2.0, 3.0]);
    }

    #[test]
    fn constant_stays_constant() {
        let x = Tensor::new(vec![4.0; 2 * 9 * 4], 2, 9, 4).unwrap();
        let p = max_pool(&x, (3, 2), (3, 2)).unwrap();
        assert!(p.data().iter().all(|&v| v == 4.0));
        let m = mean_pool(&x, (3, 2), (3, 2)).unwrap();
        assert!(m.data().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn full_width_frequency_pool() {
        let x = Tensor::zeros(3, 1376, 11).unwrap();
        assert_eq!(max_pool(&x, (1, 11), (1, 11)).unwrap().shape(), (3, 1376, 1));
    }

    #[test]
    fn oversized_pool_rejected() {
        let x = Tensor::zeros(1, 2, 1).unwrap();
        assert!(max_pool1d(&x, 3, 3).is_err());
    }

    fn reference(x: &Tensor, size: (usize, usize), stride: (usize, usize), max: bool) -> Vec<f32> {
        let (c, t, f) = x.shape();
        let mut out = vec![];
        for ch in 0..c {
            for to in 0..=(t - size.0) / stride.0 {
                for fo in 0..=(f - size.1) / stride.1 {
                    let mut acc = if max { f32::NEG_INFINITY } else { 0.0 };
                    for a in 0..size.0 {
                        for b in 0..size.1 {
                            let v = x.get(ch, to * stride.0 + a, fo * stride.1 + b);
                            if max { acc = acc.max(v) } else { acc += v }
                        }
                    }
                    out.push(if max { acc } else { acc / (size.0 * size.1) as f32 });
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_nested_loops(
            c in 1usize..3, t in 1usize..20, f in 1usize..8,
            st in 1usize..5, sf in 1usize..4, kt in 1usize..5, kf in 1usize..4,
            seed in any::<u64>(),
        ) {
            prop_assume!(kt <= t && kf <= f);
            let mut rng = SeededRng::new(seed, 1);
            let x = Tensor::new((0..c * t * f).map(|_| rng.normal() as f32).collect(), c, t, f).unwrap();
            let mx = max_pool(&x, (kt, kf), (st, sf)).unwrap();
            prop_assert_eq!(mx.data(), &reference(&x, (kt, kf), (st, sf), true)[..]);
            prop_assert_eq!(mx.shape(), (c, (t - kt) / st + 1, (f - kf) / sf + 1));
            let mn = mean_pool(&x, (kt, kf), (st, sf)).unwrap();
            for (a, b) in mn.data().iter().zip(reference(&x, (kt, kf), (st, sf), false)) {
                prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
            }
        }

        #[test]
        fn max_pool_commutes_with_monotone_maps(
            t in 2usize..24, f in 2usize..9, seed in any::<u64>(), mean in -2.0f64..2.0, scale in 0.01f64..10.0,
        ) {
            use crate::nn::{apply_channel_stats, elu_inplace, relu_inplace};
            let mut rng = SeededRng::new(seed, 2);
            let x = Tensor::new((0..2 * t * f).map(|_| (3.0 * rng.normal()) as f32).collect(), 2, t, f).unwrap();
            let stats = [(mean, scale), (-mean, 1.0 / scale)];
            let mut a = x.clone();
            apply_channel_stats(&mut a, &stats).unwrap();
            elu_inplace(&mut a);
            let mut r = x.clone();
            relu_inplace(&mut r);
            let a = max_pool(&a, (2, 2), (2, 2)).unwrap();
            let r = max_pool(&r, (2, 2), (2, 2)).unwrap();
            let mut b = max_pool(&x, (2, 2), (2, 2)).unwrap();
            let mut q = b.clone();
            apply_channel_stats(&mut b, &stats).unwrap();
            elu_inplace(&mut b);
            relu_inplace(&mut q);
            prop_assert_eq!(a.data(), b.data());
            prop_assert_eq!(r.data(), q.data());
        }
    }
}
