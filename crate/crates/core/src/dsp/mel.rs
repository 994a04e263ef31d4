use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{
    Complex, Fft, Waveform, CLIP_SAMPLES, CONTENT_FRAMES, FFT_BINS, HOP, LOG_FLOOR, MEL_BANDS,
    SAMPLE_RATE, SPEC_FRAMES, WINDOW,
};
use crate::error::{ensure, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale, stored `fft_bins x bands`.
#[derive(Clone, Debug)]
pub struct MelFilterbank {
    pub fmin: f64,
    pub fmax: f64,
    fft_bins: usize,
    bands: usize,
    weights: Vec<f64>,
    centers: Vec<f64>,
    /// Nonzero bin range of each band.
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn new(sample_rate: u32, n_fft: usize, bands: usize, fmin: f64, fmax: f64) -> Result<Self> {
        ensure!(bands >= 1 && n_fft >= 2, "degenerate filterbank ({bands} bands, n_fft {n_fft})");
        ensure!(
            0.0 <= fmin && fmin < fmax && fmax <= sample_rate as f64 / 2.0,
            "bad frequency range {fmin}..{fmax}"
        );
        let fft_bins = n_fft / 2 + 1;
        let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..bands + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (bands + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / n_fft as f64;
        let mut weights = vec![0.0; fft_bins * bands];
        let mut support = Vec::with_capacity(bands);
        for m in 0..bands {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut first = usize::MAX;
            let mut last = 0;
            for k in 0..fft_bins {
                let f = k as f64 * bin_hz;
                let w = ((f - left) / (center - left)).min((right - f) / (right - center)).max(0.0);
                if w > 0.0 {
                    weights[k * bands + m] = w;
                    first = first.min(k);
                    last = k;
                }
            }
            if first == usize::MAX {
                // Narrower than one bin: take the bin nearest the center.
                let k = (libm::round(center / bin_hz) as usize).min(fft_bins - 1);
                weights[k * bands + m] = 1.0;
                first = k;
                last = k;
            }
            support.push((first, last));
        }
        Ok(Self { fmin, fmax, fft_bins, bands, weights, centers: edges[1..=bands].to_vec(), support })
    }

    /// The 96-band, 0-6 kHz bank used for all spectrogram inputs.
    pub fn canonical() -> Self {
        Self::new(SAMPLE_RATE, WINDOW, MEL_BANDS, 0.0, SAMPLE_RATE as f64 / 2.0)
            .expect("canonical filterbank parameters are valid")
    }

    pub fn fft_bins(&self) -> usize {
        self.fft_bins
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn weight(&self, bin: usize, band: usize) -> f64 {
        self.weights[bin * self.bands + band]
    }

    /// Peak frequency of each band in Hz.
    pub fn centers_hz(&self) -> &[f64] {
        &self.centers
    }

    /// Projects one power spectrum (`fft_bins` values) onto the bands.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        debug_assert_eq!(power.len(), self.fft_bins);
        for (m, o) in out.iter_mut().enumerate().take(self.bands) {
            let (a, b) = self.support[m];
            *o = (a..=b).map(|k| power[k] * self.weights[k * self.bands + m]).sum();
        }
    }
}

/// Log-compressed mel energies, row-major `time_frames x mel_bands`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogMelSpectrogram {
    pub values: Vec<f32>,
    pub time_frames: usize,
    pub mel_bands: usize,
    /// Frames computed from audio; the rest are right padding.
    pub content_frames: usize,
}

impl LogMelSpectrogram {
    pub fn new(values: Vec<f32>, time_frames: usize, mel_bands: usize) -> Result<Self> {
        ensure!(
            time_frames >= 1 && mel_bands >= 1 && values.len() == time_frames * mel_bands,
            "spectrogram storage {} does not match {time_frames}x{mel_bands}",
            values.len()
        );
        Ok(Self { values, time_frames, mel_bands, content_frames: time_frames })
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.values[t * self.mel_bands..(t + 1) * self.mel_bands]
    }

    pub fn get(&self, t: usize, band: usize) -> f32 {
        self.values[t * self.mel_bands + band]
    }
}

/// Per-frame mean over mel bands.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub values: Vec<f32>,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64)).collect()
}

/// Magnitude-squared STFT (periodic Hann 512, hop 256, no centering).
///
/// Returns `frames x FFT_BINS` values; frames = `(len - 512) / 256 + 1`.
pub fn power_spectrogram(samples: &[f32]) -> Result<(Vec<f64>, usize)> {
    ensure!(samples.len() >= WINDOW, "need at least {WINDOW} samples, got {}", samples.len());
    let frames = (samples.len() - WINDOW) / HOP + 1;
    let fft = Fft::new(WINDOW)?;
    let window = hann(WINDOW);
    let mut buf = vec![Complex::default(); WINDOW];
    let mut power = Vec::with_capacity(frames * FFT_BINS);
    for t in 0..frames {
        let frame = &samples[t * HOP..t * HOP + WINDOW];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(x as f64 * w, 0.0);
        }
        fft.forward(&mut buf);
        power.extend(buf[..FFT_BINS].iter().map(|c| c.norm_sqr()));
    }
    Ok((power, frames))
}

/// Canonical 1376 x 96 log-mel spectrogram of a prepared waveform.
///
/// 1366 frames come from the audio; the remaining 10 are padded with zero
/// power, i.e. the log floor.
pub fn log_mel(w: &Waveform) -> Result<LogMelSpectrogram> {
    ensure!(
        w.is_canonical(),
        "log_mel expects a prepared {SAMPLE_RATE} Hz, {CLIP_SAMPLES}-sample waveform, got {} Hz x {}",
        w.sample_rate,
        w.samples.len()
    );
    let (power, frames) = power_spectrogram(&w.samples)?;
    debug_assert_eq!(frames, CONTENT_FRAMES);
    let bank = MelFilterbank::canonical();
    let floor = libm::log(LOG_FLOOR) as f32;
    let mut values = vec![floor; SPEC_FRAMES * MEL_BANDS];
    let mut mel = [0.0f64; MEL_BANDS];
    for t in 0..frames {
        bank.apply(&power[t * FFT_BINS..(t + 1) * FFT_BINS], &mut mel);
        for (dst, &e) in values[t * MEL_BANDS..(t + 1) * MEL_BANDS].iter_mut().zip(&mel) {
            *dst = libm::log(LOG_FLOOR + e) as f32;
        }
    }
    Ok(LogMelSpectrogram {
        values,
        time_frames: SPEC_FRAMES,
        mel_bands: MEL_BANDS,
        content_frames: frames,
    })
}

/// Mean over the frequency axis, one value per frame.
pub fn energy_envelope(s: &LogMelSpectrogram) -> Result<Envelope> {
    ensure!(
        s.mel_bands >= 1 && s.values.len() == s.time_frames * s.mel_bands,
        "malformed spectrogram"
    );
    let values = s
        .values
        .chunks_exact(s.mel_bands)
        .map(|row| (row.iter().map(|&v| v as f64).sum::<f64>() / s.mel_bands as f64) as f32)
        .collect();
    Ok(Envelope { values })
}
