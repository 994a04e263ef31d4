use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{log_mel, Waveform};
use crate::error::Result;

/// Cepstral coefficients kept per frame.
pub const MFCC_COEFFS: usize = 20;
/// Mean and standard deviation of 20 MFCCs, their deltas and delta-deltas.
pub const MFCC_DIM: usize = 6 * MFCC_COEFFS;

const DELTA_WIDTH: isize = 2;

/// First `keep` coefficients of the orthonormal DCT-II of `x`.
pub fn dct_ii_orthonormal(x: &[f64], keep: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..keep)
        .map(|k| {
            let scale = if k == 0 { libm::sqrt(1.0 / n) } else { libm::sqrt(2.0 / n) };
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * libm::cos(PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)))
                .sum();
            scale * s
        })
        .collect()
}

/// Regression deltas over +-2 frames with edge replication.
///
/// `frames` is `len x width` row-major.
pub fn deltas(frames: &[f64], width: usize) -> Vec<f64> {
    let len = (frames.len() / width) as isize;
    let denom: f64 = 2.0 * (1..=DELTA_WIDTH).map(|n| (n * n) as f64).sum::<f64>();
    let at = |t: isize, c: usize| frames[t.clamp(0, len - 1) as usize * width + c];
    let mut out = vec![0.0; frames.len()];
    for t in 0..len {
        for c in 0..width {
            let num: f64 = (1..=DELTA_WIDTH).map(|n| n as f64 * (at(t + n, c) - at(t - n, c))).sum();
            out[t as usize * width + c] = num / denom;
        }
    }
    out
}

/// Mean and population standard deviation of each column.
///
/// Deviations are taken from the first row, so constant columns give a
/// standard deviation of exactly zero.
fn column_stats(frames: &[f64], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (frames.len() / width) as f64;
    let first = &frames[..width];
    let mut shift_sum = vec![0.0; width];
    let mut shift_sq = vec![0.0; width];
    for row in frames.chunks_exact(width) {
        for c in 0..width {
            let d = row[c] - first[c];
            shift_sum[c] += d;
            shift_sq[c] += d * d;
        }
    }
    let mean = (0..width).map(|c| first[c] + shift_sum[c] / n).collect();
    let std = (0..width)
        .map(|c| {
            let m = shift_sum[c] / n;
            libm::sqrt((shift_sq[c] / n - m * m).max(0.0))
        })
        .collect();
    (mean, std)
}

/// 120-dimensional MFCC baseline vector of a prepared waveform.
///
/// Layout: means of the 20 MFCCs, 20 deltas and 20 delta-deltas, followed
/// by their standard deviations in the same order. Only frames computed
/// from audio are used (the spectrogram's right padding is excluded).
pub fn mfcc_vector(w: &Waveform) -> Result<Vec<f32>> {
    let spec = log_mel(w)?;
    let frames = spec.content_frames;
    let mut cep = Vec::with_capacity(frames * MFCC_COEFFS);
    let mut row = vec![0.0f64; spec.mel_bands];
    for t in 0..frames {
        for (r, &v) in row.iter_mut().zip(spec.frame(t)) {
            *r = v as f64;
        }
        cep.extend(dct_ii_orthonormal(&row, MFCC_COEFFS));
    }
    let d1 = deltas(&cep, MFCC_COEFFS);
    let d2 = deltas(&d1, MFCC_COEFFS);
    let mut means = Vec::with_capacity(3 * MFCC_COEFFS);
    let mut stds = Vec::with_capacity(3 * MFCC_COEFFS);
    for stream in [&cep, &d1, &d2] {
        let (m, s) = column_stats(stream, MFCC_COEFFS);
        means.extend(m);
        stds.extend(s);
    }
    Ok(means.into_iter().chain(stds).map(|v| v as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{CLIP_SAMPLES, SAMPLE_RATE};

    #[test]
    fn dct_of_constant_has_only_dc() {
        let c = dct_ii_orthonormal(&[3.0; 8], 4);
        assert!((c[0] - 3.0 * libm::sqrt(8.0)).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dct_is_orthonormal() {
        // Parseval: full-length orthonormal DCT preserves energy.
        let x: Vec<f64> = (0..16).map(|i| libm::sin(i as f64 * 0.7) + 0.1 * i as f64).collect();
        let c = dct_ii_orthonormal(&x, 16);
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        assert!((ex - ec).abs() < 1e-9);
    }

    #[test]
    fn deltas_of_ramp_are_slope() {
        let frames: Vec<f64> = (0..10).map(|t| 2.0 * t as f64).collect();
        let d = deltas(&frames, 1);
        for v in &d[2..8] {
            assert!((v - 2.0).abs() < 1e-12);
        }
        // Edge replication: t=0 sees [0,0,0,2,4] -> (1*2 + 2*4) / 10.
        assert!((d[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn silence_gives_zero_dynamics() {
        let v = mfcc_vector(&Waveform::new(vec![0.0; CLIP_SAMPLES], SAMPLE_RATE, "z")).unwrap();
        assert_eq!(v.len(), MFCC_DIM);
        assert!(v[MFCC_COEFFS..3 * MFCC_COEFFS].iter().all(|&x| x == 0.0));
        assert!(v[3 * MFCC_COEFFS..].iter().all(|&x| x == 0.0));
        assert!(v[0] < 0.0);
    }
}
