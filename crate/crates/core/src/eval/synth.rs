//! Synthetic desk-scale surrogates: a timbre task (harmonic complexes that
//! differ in amplitude profile) and a rhythm task (click trains that differ
//! in tempo).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::dsp::{Waveform, CLIP_SAMPLES, SAMPLE_RATE};
use crate::error::{ensure, invalid, Result};
use crate::rng::{mix_seed, SeededRng};

/// Class profiles are drawn from this seed so every dataset seed shares them.
const PROFILE_SEED: u64 = 0x5449_4d42_5245;
/// Output RMS of every clip.
const TARGET_RMS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SynthTask {
    Timbre,
    Rhythm,
}

impl SynthTask {
    pub fn name(self) -> &'static str {
        match self {
            SynthTask::Timbre => "timbre",
            SynthTask::Rhythm => "rhythm",
        }
    }
}

impl fmt::Display for SynthTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SynthTask {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "timbre" => Ok(SynthTask::Timbre),
            "rhythm" => Ok(SynthTask::Rhythm),
            _ => invalid!("unknown synthetic task '{s}' (expected timbre or rhythm)"),
        }
    }
}

/// Fixed generator constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub f0_hz: f64,
    /// Relative f0 jitter per clip (uniform, ±).
    pub f0_jitter: f64,
    pub harmonics: usize,
    /// Log-normal spread applied to each harmonic amplitude per clip.
    pub profile_jitter: f64,
    /// White noise level relative to the clean signal, dB.
    pub noise_db: f64,
    pub base_bpm: f64,
    pub step_bpm: f64,
    /// Relative tempo jitter per clip (uniform, ±).
    pub tempo_jitter: f64,
    /// Click carrier frequency and decay time constant.
    pub click_hz: f64,
    pub click_decay_s: f64,
    /// Level of the rhythm task's background noise relative to the clicks,
    /// drawn per clip uniformly in this dB range.
    pub rhythm_noise_db: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            f0_hz: 220.0,
            f0_jitter: 0.03,
            harmonics: 16,
            profile_jitter: 1.0,
            noise_db: -30.0,
            base_bpm: 90.0,
            step_bpm: 30.0,
            tempo_jitter: 0.02,
            click_hz: 1500.0,
            click_decay_s: 0.01,
            rhythm_noise_db: (-30.0, -10.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub task: SynthTask,
    pub classes: usize,
    pub clips_per_class: usize,
    pub seed: u64,
    pub params: SynthParams,
}

impl SyntheticSpec {
    pub fn new(task: SynthTask, classes: usize, clips_per_class: usize, seed: u64) -> Self {
        Self { task, classes, clips_per_class, seed, params: SynthParams::default() }
    }

    pub fn len(&self) -> usize {
        self.classes * self.clips_per_class
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Labels in clip order; clips are grouped by class.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.len()).map(|i| i / self.clips_per_class).collect()
    }

    pub fn clip_id(&self, index: usize) -> alloc::string::String {
        format!("{}_{:02}_{:04}", self.task, index / self.clips_per_class, index % self.clips_per_class)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.classes >= 2, "synthetic task needs at least two classes");
        ensure!(self.clips_per_class >= 1, "synthetic task needs at least one clip per class");
        if self.task == SynthTask::Rhythm {
            let top = self.tempo(self.classes - 1);
            ensure!(top <= 600.0, "tempo {top} BPM too fast for {} classes", self.classes);
        }
        Ok(())
    }

    /// Nominal tempo of a rhythm class, BPM.
    pub fn tempo(&self, class: usize) -> f64 {
        self.params.base_bpm + self.params.step_bpm * class as f64
    }

    /// Harmonic amplitude profile of a timbre class.
    pub fn profile(&self, class: usize) -> Vec<f64> {
        let mut rng = SeededRng::new(PROFILE_SEED, class as u64);
        (0..self.params.harmonics).map(|_| 0.05 + 0.95 * rng.next_f64()).collect()
    }

    /// Generates clip `index` (a pure function of these settings and the index).
    pub fn clip(&self, index: usize) -> Result<Waveform> {
        self.validate()?;
        ensure!(index < self.len(), "clip {index} out of range for {} clips", self.len());
        let class = index / self.clips_per_class;
        let mut rng = SeededRng::new(mix_seed(self.seed, self.task as u64), index as u64);
        let mut s = match self.task {
            SynthTask::Timbre => self.timbre(class, &mut rng),
            SynthTask::Rhythm => self.rhythm(class, &mut rng),
        };
        normalize_rms(&mut s);
        let samples = s.iter().map(|&v| (v as f32).clamp(-1.0, 1.0)).collect();
        Ok(Waveform::new(samples, SAMPLE_RATE, self.clip_id(index)))
    }

    /// All clips with their labels.
    pub fn generate(&self) -> Result<(Vec<Waveform>, Vec<usize>)> {
        let clips = (0..self.len()).map(|i| self.clip(i)).collect::<Result<Vec<_>>>()?;
        Ok((clips, self.labels()))
    }

    fn timbre(&self, class: usize, rng: &mut SeededRng) -> Vec<f64> {
        let p = &self.params;
        let f0 = p.f0_hz * (1.0 + p.f0_jitter * (2.0 * rng.next_f64() - 1.0));
        let nyquist = SAMPLE_RATE as f64 / 2.0;
        let mut out = alloc::vec![0.0f64; CLIP_SAMPLES];
        for (h, &base) in self.profile(class).iter().enumerate() {
            let amp = base * libm::exp(p.profile_jitter * rng.normal());
            let freq = f0 * (h + 1) as f64;
            let phase = 2.0 * PI * rng.next_f64();
            if freq >= nyquist {
                continue;
            }
            add_sinusoid(&mut out, amp, freq, phase);
        }
        let clean = rms(&out);
        add_noise(&mut out, clean * db_to_amp(p.noise_db), rng);
        out
    }

    fn rhythm(&self, class: usize, rng: &mut SeededRng) -> Vec<f64> {
        let p = &self.params;
        let sr = SAMPLE_RATE as f64;
        let bpm = self.tempo(class) * (1.0 + p.tempo_jitter * (2.0 * rng.next_f64() - 1.0));
        let period = 60.0 / bpm * sr;
        let click = click(p.click_hz, p.click_decay_s);
        let mut out = alloc::vec![0.0f64; CLIP_SAMPLES];
        let mut t = rng.next_f64() * period;
        while (t as usize) < CLIP_SAMPLES {
            let start = t as usize;
            for (o, c) in out[start..].iter_mut().zip(&click) {
                *o += c;
            }
            t += period;
        }
        let clean = rms(&out);
        let (lo, hi) = p.rhythm_noise_db;
        let level = lo + (hi - lo) * rng.next_f64();
        add_noise(&mut out, clean * db_to_amp(level), rng);
        out
    }
}

/// Exponentially decaying sine burst, 5 time constants long.
fn click(freq: f64, decay: f64) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let n = (5.0 * decay * sr) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            libm::exp(-t / decay) * libm::sin(2.0 * PI * freq * t)
        })
        .collect()
}

/// Phasor recursion, renormalized every 4096 samples.
fn add_sinusoid(out: &mut [f64], amp: f64, freq: f64, phase: f64) {
    let w = 2.0 * PI * freq / SAMPLE_RATE as f64;
    let (sw, cw) = (libm::sin(w), libm::cos(w));
    for (block, chunk) in out.chunks_mut(4096).enumerate() {
        let start = phase + w * (block * 4096) as f64;
        let (mut s, mut c) = (libm::sin(start), libm::cos(start));
        for o in chunk {
            *o += amp * s;
            let ns = s * cw + c * sw;
            c = c * cw - s * sw;
            s = ns;
        }
    }
}

fn add_noise(out: &mut [f64], level: f64, rng: &mut SeededRng) {
    for o in out {
        *o += level * rng.normal();
    }
}

fn db_to_amp(db: f64) -> f64 {
    libm::pow(10.0, db / 20.0)
}

fn rms(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64)
}

fn normalize_rms(x: &mut [f64]) {
    let r = rms(x);
    if r > 0.0 {
        let g = TARGET_RMS / r;
        x.iter_mut().for_each(|v| *v *= g);
    }
}
