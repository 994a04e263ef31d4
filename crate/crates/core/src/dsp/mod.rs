//! Audio preparation and time-frequency features.

mod fft;
mod mel;
mod mfcc;
mod resample;
mod waveform;

pub use fft::{Complex, Fft};
pub use mel::{
    energy_envelope, hz_to_mel, log_mel, mel_to_hz, power_spectrogram, Envelope,
    LogMelSpectrogram, MelFilterbank,
};
pub use mfcc::{dct_ii_orthonormal, deltas, mfcc_vector, MFCC_COEFFS, MFCC_DIM};
pub use resample::Resampler;
pub use waveform::{prepare_waveform, Waveform};

/// Sample rate of every prepared waveform.
pub const SAMPLE_RATE: u32 = 12_000;
/// Length of every prepared waveform (about 29 s).
pub const CLIP_SAMPLES: usize = 350_000;
/// STFT window length (Hann).
pub const WINDOW: usize = 512;
/// STFT hop length.
pub const HOP: usize = 256;
/// Number of FFT bins kept (`WINDOW / 2 + 1`).
pub const FFT_BINS: usize = WINDOW / 2 + 1;
/// Number of mel bands.
pub const MEL_BANDS: usize = 96;
/// Frame count of a canonical spectrogram, after right padding.
pub const SPEC_FRAMES: usize = 1376;
/// Frames actually computed from a canonical clip before padding.
pub const CONTENT_FRAMES: usize = (CLIP_SAMPLES - WINDOW) / HOP + 1;
/// Additive floor inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
