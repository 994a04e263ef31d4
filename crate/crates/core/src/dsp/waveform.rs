use alloc::string::String;
use alloc::vec::Vec;

use super::{Resampler, CLIP_SAMPLES, SAMPLE_RATE};
use crate::error::{ensure, Result};

/// Mono audio samples in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub source_id: String,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_id: impl Into<String>) -> Self {
        Self { samples, sample_rate, source_id: source_id.into() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True for 12 kHz, 350,000-sample waveforms.
    pub fn is_canonical(&self) -> bool {
        self.sample_rate == SAMPLE_RATE && self.samples.len() == CLIP_SAMPLES
    }
}

/// Resamples to 12 kHz, then tiles or truncates to exactly 350,000 samples.
///
/// Short clips are repeated end to end, so for a 12 kHz input of length `L`
/// the output satisfies `out[i] == in[i % L]`.
pub fn prepare_waveform(w: &Waveform) -> Result<Waveform> {
    ensure!(!w.samples.is_empty(), "cannot prepare an empty waveform ({})", w.source_id);
    ensure!(w.sample_rate > 0, "sample rate must be positive ({})", w.source_id);

    let resampled;
    let source: &[f32] = if w.sample_rate == SAMPLE_RATE {
        &w.samples
    } else {
        resampled = Resampler::new(w.sample_rate, SAMPLE_RATE)?.process(&w.samples);
        ensure!(!resampled.is_empty(), "resampling produced no samples ({})", w.source_id);
        &resampled
    };

    let mut samples = Vec::with_capacity(CLIP_SAMPLES);
    while samples.len() < CLIP_SAMPLES {
        let take = (CLIP_SAMPLES - samples.len()).min(source.len());
        samples.extend_from_slice(&source[..take]);
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    Ok(Waveform { samples, sample_rate: SAMPLE_RATE, source_id: w.source_id.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<f32> {
        (0..n).map(|i| ((i % 1000) as f32 / 1000.0) - 0.5).collect()
    }

    #[test]
    fn canonical_input_unchanged() {
        let w = Waveform::new(ramp(CLIP_SAMPLES), SAMPLE_RATE, "a");
        let p = prepare_waveform(&w).unwrap();
        assert_eq!(p, w);
        assert_eq!(prepare_waveform(&p).unwrap(), p);
    }

    #[test]
    fn short_input_is_tiled() {
        let src: Vec<f32> = (0..100_000).map(|i| (i as f32 * 1e-5).sin() * 0.5).collect();
        let p = prepare_waveform(&Waveform::new(src.clone(), SAMPLE_RATE, "b")).unwrap();
        assert_eq!(p.len(), CLIP_SAMPLES);
        for (i, &v) in p.samples.iter().enumerate() {
            assert_eq!(v, src[i % src.len()]);
        }
        assert_eq!(&p.samples[300_000..], &src[..50_000]);
    }

    #[test]
    fn long_input_is_truncated() {
        let src = ramp(400_000);
        let p = prepare_waveform(&Waveform::new(src.clone(), SAMPLE_RATE, "c")).unwrap();
        assert_eq!(p.samples, src[..CLIP_SAMPLES]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(prepare_waveform(&Waveform::new(Vec::new(), SAMPLE_RATE, "e")).is_err());
    }

    #[test]
    fn other_rates_are_resampled() {
        let p = prepare_waveform(&Waveform::new(ramp(44_100), 44_100, "r")).unwrap();
        assert!(p.is_canonical());
        assert!(p.samples.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
