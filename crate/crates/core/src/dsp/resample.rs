use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{ensure, Result};

const TAPS: usize = 64;
const HALF: isize = (TAPS / 2) as isize;
const KAISER_BETA: f64 = 8.6;
/// Cutoff as a fraction of the output Nyquist when downsampling.
const ROLLOFF: f64 = 0.95;

/// Rational-ratio windowed-sinc resampler (Kaiser window, 64 taps per phase).
///
/// Output sample `n` sits at input position `n * from / to`; the fractional
/// part takes one of `to / gcd(from, to)` values, each with its own
/// precomputed, unit-DC-gain tap set.
#[derive(Clone, Debug)]
pub struct Resampler {
    from: u32,
    to: u32,
    up: u64,
    down: u64,
    table: Vec<f32>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

impl Resampler {
    pub fn new(from: u32, to: u32) -> Result<Self> {
        ensure!(from > 0 && to > 0, "sample rates must be positive ({from} -> {to})");
        let g = gcd(from as u64, to as u64);
        let up = to as u64 / g;
        let down = from as u64 / g;
        let cutoff = if to < from { ROLLOFF * to as f64 / from as f64 } else { 1.0 };
        let norm = bessel_i0(KAISER_BETA);
        let mut table = vec![0.0f32; up as usize * TAPS];
        let mut taps = [0.0f64; TAPS];
        for phase in 0..up as usize {
            let frac = phase as f64 / up as f64;
            let mut sum = 0.0;
            for (j, tap) in taps.iter_mut().enumerate() {
                // Input sample floor(pos) - HALF + 1 + j sits at distance d.
                let d = (j as isize - HALF + 1) as f64 - frac;
                let r = d / HALF as f64;
                let w = if r.abs() >= 1.0 {
                    0.0
                } else {
                    bessel_i0(KAISER_BETA * libm::sqrt(1.0 - r * r)) / norm
                };
                *tap = cutoff * sinc(cutoff * d) * w;
                sum += *tap;
            }
            for (j, tap) in taps.iter().enumerate() {
                table[phase * TAPS + j] = (tap / sum) as f32;
            }
        }
        Ok(Self { from, to, up, down, table })
    }

    pub fn from_rate(&self) -> u32 {
        self.from
    }

    pub fn to_rate(&self) -> u32 {
        self.to
    }

    /// Number of output samples for `n` input samples: `ceil(n * to / from)`.
    pub fn output_len(&self, n: usize) -> usize {
        ((n as u64 * self.up).div_ceil(self.down)) as usize
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        let n_out = self.output_len(input.len());
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out as u64 {
            let num = n * self.down;
            let base = (num / self.up) as isize;
            let phase = (num % self.up) as usize;
            let taps = &self.table[phase * TAPS..(phase + 1) * TAPS];
            let start = base - HALF + 1;
            let mut acc = 0.0f32;
            if start >= 0 && (start as usize + TAPS) <= input.len() {
                let s = start as usize;
                for (x, h) in input[s..s + TAPS].iter().zip(taps) {
                    acc += x * h;
                }
            } else {
                for (j, h) in taps.iter().enumerate() {
                    let idx = start + j as isize;
                    if idx >= 0 && (idx as usize) < input.len() {
                        acc += input[idx as usize] * h;
                    }
                }
            }
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: f64, n: usize, amp: f64) -> Vec<f32> {
        (0..n).map(|i| (amp * libm::sin(2.0 * PI * freq * i as f64 / rate)) as f32).collect()
    }

    /// Single-bin DFT magnitude, scaled to sinusoid amplitude.
    fn dft_amplitude(x: &[f32], bin: usize) -> f64 {
        let n = x.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let a = 2.0 * PI * bin as f64 * i as f64 / n;
            re += v as f64 * libm::cos(a);
            im -= v as f64 * libm::sin(a);
        }
        2.0 * libm::sqrt(re * re + im * im) / n
    }

    #[test]
    fn downsampled_tone_keeps_frequency_and_amplitude() {
        let input = tone(1000.0, 24_000.0, 24_000, 0.5);
        let r = Resampler::new(24_000, 12_000).unwrap();
        let out = r.process(&input);
        assert_eq!(out.len(), 12_000);
        // 1200-sample window in the middle: 10 Hz bins, 1 kHz is bin 100.
        let seg = &out[5_000..6_200];
        let peak = dft_amplitude(seg, 100);
        for bin in (0..600).filter(|&b| b != 100) {
            assert!(dft_amplitude(seg, bin) < peak, "bin {bin} beats 1 kHz");
        }
        assert!((peak - 0.5).abs() / 0.5 < 0.01, "amplitude {peak}");
    }

    #[test]
    fn upsampling_preserves_dc() {
        let r = Resampler::new(8_000, 12_000).unwrap();
        let out = r.process(&vec![0.25f32; 4_000]);
        assert_eq!(out.len(), 6_000);
        for v in &out[100..5_900] {
            assert!((v - 0.25).abs() < 1e-5);
        }
    }

    #[test]
    fn output_length_rounds_up() {
        let r = Resampler::new(44_100, 12_000).unwrap();
        assert_eq!(r.output_len(44_100), 12_000);
        assert_eq!(r.output_len(1), 1);
    }
}
