use alloc::string::String;
use alloc::vec::Vec;

use super::{ArchId, Capacity, FrontEndSpec, InputKind};
use crate::dsp::{
    energy_envelope, log_mel, mfcc_vector, Envelope, LogMelSpectrogram, Waveform, MEL_BANDS,
    SPEC_FRAMES,
};
use crate::error::{ensure, invalid, Result};
use crate::nn::{
    apply_channel_stats, channel_stats, conv1d, conv2d, elu_inplace, global_average, init_filters, max_pool,
    max_pool1d, relu_inplace, residual_add, FilterBank, FilterShape, Padding, Tensor,
};
use crate::rng::SeededRng;

const SAMPLE_LEVEL_BLOCKS: usize = 7;
const FRAME_LENGTHS: [usize; 5] = [512, 256, 128, 64, 32];
const FRAME_STRIDE: usize = 32;
const DEEP_KERNEL: usize = 7;
const TIMBRAL_SHAPES: [(usize, usize); 6] = [(7, 86), (3, 86), (1, 86), (7, 38), (3, 38), (1, 38)];
const TEMPORAL_LENGTHS: [usize; 4] = [165, 128, 64, 32];
const TIME_LENGTHS: [usize; 4] = [64, 32, 16, 8];
const VGG_POOLS: [(usize, usize); 5] = [(4, 2), (4, 3), (5, 2), (4, 2), (4, 4)];

/// A clip in the representation an extractor consumes.
#[derive(Clone, Copy, Debug)]
pub enum FrontEndInput<'a> {
    Waveform(&'a Waveform),
    LogMel(&'a LogMelSpectrogram),
    Envelope(&'a Envelope),
}

/// Feature vector of one clip plus provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f32>,
    pub arch: ArchId,
    pub capacity: Capacity,
    pub clip_id: String,
    pub seed: u64,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// One conv layer made of several filter shapes whose outputs are stacked.
#[derive(Clone, Debug)]
struct WideLayer {
    banks: Vec<FilterBank>,
    /// Frequency max-pool width per bank (1 = none).
    freq_pools: Vec<usize>,
}

#[derive(Clone, Debug)]
enum Network {
    SampleLevel(Vec<FilterBank>),
    FrameLevel { first: WideLayer, deep: [FilterBank; 3] },
    Spectrogram(WideLayer),
    Envelope(WideLayer),
    Wide { timbral: WideLayer, temporal: WideLayer },
    Vgg(Vec<FilterBank>),
    Mfcc,
}

/// An immutable, seeded front-end.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    spec: FrontEndSpec,
    network: Network,
}

struct Builder {
    spec: FrontEndSpec,
}

impl Builder {
    fn bank(&self, layer: u64, group: u64, shape: FilterShape) -> Result<FilterBank> {
        let stream = ((self.spec.arch.code() as u64) << 32) | (layer << 16) | group;
        init_filters(shape, &mut SeededRng::new(self.spec.seed, stream))
    }

    /// Same-in-time, valid-in-frequency spectrogram layer.
    fn timbral(&self, layer: u64, counts: &[usize]) -> Result<WideLayer> {
        let mut banks = Vec::new();
        let mut freq_pools = Vec::new();
        for (g, (&(kt, kf), &n)) in TIMBRAL_SHAPES.iter().zip(counts).enumerate() {
            banks.push(
                self.bank(layer, g as u64, FilterShape::new_2d(n, 1, kt, kf))?
                    .with_padding(Padding::Same, Padding::Valid),
            );
            freq_pools.push(MEL_BANDS - kf + 1);
        }
        Ok(WideLayer { banks, freq_pools })
    }

    fn envelope(&self, layer: u64, group0: usize, lengths: &[usize], counts: &[usize]) -> Result<WideLayer> {
        let banks = lengths
            .iter()
            .zip(counts)
            .enumerate()
            .map(|(g, (&k, &n))| {
                Ok(self
                    .bank(layer, (group0 + g) as u64, FilterShape::new_1d(n, 1, k))?
                    .with_padding(Padding::Same, Padding::Valid))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WideLayer { freq_pools: alloc::vec![1; banks.len()], banks })
    }

    fn build(&self) -> Result<Network> {
        let alloc = self.spec.allocation();
        let layers = &alloc.layers;
        Ok(match self.spec.arch {
            ArchId::SampleLevel => {
                let n = layers[0][0];
                let mut banks = Vec::with_capacity(SAMPLE_LEVEL_BLOCKS);
                banks.push(self.bank(0, 0, FilterShape::new_1d(n, 1, 3))?.with_stride(3, 1));
                for b in 1..SAMPLE_LEVEL_BLOCKS {
                    banks.push(self.bank(b as u64, 0, FilterShape::new_1d(n, n, 3))?);
                }
                Network::SampleLevel(banks)
            }
            ArchId::FrameLevel | ArchId::FrameLevelMany => {
                let first = if self.spec.arch == ArchId::FrameLevel {
                    let bank = self
                        .bank(0, 0, FilterShape::new_1d(layers[0][0], 1, FRAME_LENGTHS[0]))?
                        .with_stride(FRAME_STRIDE, 1);
                    WideLayer { banks: alloc::vec![bank], freq_pools: alloc::vec![1] }
                } else {
                    let banks = FRAME_LENGTHS
                        .iter()
                        .zip(&layers[0])
                        .enumerate()
                        .map(|(g, (&k, &n))| {
                            Ok(self
                                .bank(0, g as u64, FilterShape::new_1d(n, 1, k))?
                                .with_stride(FRAME_STRIDE, 1)
                                .with_padding(Padding::Same, Padding::Valid))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    WideLayer { freq_pools: alloc::vec![1; banks.len()], banks }
                };
                let width_in: usize = layers[0].iter().sum();
                let d = layers[1][0];
                let deep_bank = |layer: u64, cin: usize| -> Result<FilterBank> {
                    Ok(self
                        .bank(layer, 0, FilterShape::new_1d(d, cin, DEEP_KERNEL))?
                        .with_padding(Padding::Same, Padding::Valid))
                };
                Network::FrameLevel {
                    first,
                    deep: [deep_bank(1, width_in)?, deep_bank(2, d)?, deep_bank(3, d)?],
                }
            }
            ArchId::V7x96 | ArchId::V7x86 => {
                let kf = if self.spec.arch == ArchId::V7x96 { MEL_BANDS } else { 86 };
                let bank = self
                    .bank(0, 0, FilterShape::new_2d(layers[0][0], 1, 7, kf))?
                    .with_padding(Padding::Same, Padding::Valid);
                Network::Spectrogram(WideLayer {
                    banks: alloc::vec![bank],
                    freq_pools: alloc::vec![MEL_BANDS - kf + 1],
                })
            }
            ArchId::Timbral => Network::Spectrogram(self.timbral(0, &layers[0])?),
            ArchId::Temporal => Network::Envelope(self.envelope(0, 0, &TEMPORAL_LENGTHS, &layers[0])?),
            ArchId::Time => Network::Envelope(self.envelope(0, 0, &TIME_LENGTHS, &layers[0])?),
            ArchId::TimbralTemporal | ArchId::TimbralTime => {
                let lengths =
                    if self.spec.arch == ArchId::TimbralTemporal { &TEMPORAL_LENGTHS } else { &TIME_LENGTHS };
                let (tim, tem) = layers[0].split_at(TIMBRAL_SHAPES.len());
                Network::Wide {
                    timbral: self.timbral(0, tim)?,
                    temporal: self.envelope(0, TIMBRAL_SHAPES.len(), lengths, tem)?,
                }
            }
            ArchId::Vgg => {
                let n = layers[0][0];
                let banks = (0..VGG_POOLS.len())
                    .map(|b| {
                        let cin = if b == 0 { 1 } else { n };
                        Ok(self
                            .bank(b as u64, 0, FilterShape::new_2d(n, cin, 3, 3))?
                            .with_padding(Padding::Same, Padding::Same))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Network::Vgg(banks)
            }
            ArchId::Mfcc => Network::Mfcc,
        })
    }
}

/// Builds the seeded extractor for `spec`.
pub fn build_frontend(spec: FrontEndSpec) -> Result<FeatureExtractor> {
    let network = Builder { spec }.build()?;
    Ok(FeatureExtractor { spec, network })
}

fn spectrogram_tensor(s: &LogMelSpectrogram) -> Result<Tensor> {
    ensure!(
        s.time_frames == SPEC_FRAMES && s.mel_bands == MEL_BANDS,
        "expected a {SPEC_FRAMES}x{MEL_BANDS} spectrogram, got {}x{}",
        s.time_frames,
        s.mel_bands
    );
    Tensor::new(s.values.clone(), 1, s.time_frames, s.mel_bands)
}

fn envelope_tensor(e: &Envelope) -> Result<Tensor> {
    ensure!(e.values.len() == SPEC_FRAMES, "expected a {SPEC_FRAMES}-frame envelope, got {}", e.values.len());
    Tensor::new_1d(e.values.clone(), 1, e.values.len())
}

/// Conv + ReLU (+ frequency max-pool) for every bank; appends averages.
fn wide_forward(layer: &WideLayer, x: &Tensor, features: &mut Vec<f32>) -> Result<()> {
    for (bank, &pool) in layer.banks.iter().zip(&layer.freq_pools) {
        let mut y = conv2d(x, bank)?;
        if pool > 1 {
            y = max_pool(&y, (1, pool), (1, pool))?;
        }
        relu_inplace(&mut y);
        features.extend(global_average(&y));
    }
    Ok(())
}

impl FeatureExtractor {
    pub fn spec(&self) -> &FrontEndSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        super::feature_dimension(&self.spec)
    }

    pub fn input_kind(&self) -> InputKind {
        match self.network {
            // The wide layer consumes the spectrogram and derives the envelope.
            Network::Wide { .. } => InputKind::LogMel,
            _ => self.spec.arch.input_kind(),
        }
    }

    /// All filter banks in forward order.
    pub fn filter_banks(&self) -> Vec<&FilterBank> {
        match &self.network {
            Network::SampleLevel(b) | Network::Vgg(b) => b.iter().collect(),
            Network::FrameLevel { first, deep } => first.banks.iter().chain(deep.iter()).collect(),
            Network::Spectrogram(l) | Network::Envelope(l) => l.banks.iter().collect(),
            Network::Wide { timbral, temporal } => timbral.banks.iter().chain(&temporal.banks).collect(),
            Network::Mfcc => Vec::new(),
        }
    }

    /// Feature vector of a clip given in the representation this front-end
    /// consumes.
    pub fn extract(&self, input: FrontEndInput<'_>) -> Result<Vec<f32>> {
        let mut features = Vec::with_capacity(self.dim());
        match (&self.network, input) {
            (Network::Mfcc, FrontEndInput::Waveform(w)) => features = mfcc_vector(w)?,
            (Network::SampleLevel(banks), FrontEndInput::Waveform(w)) => {
                let mut x = self.waveform_tensor(w)?;
                for (b, bank) in banks.iter().enumerate() {
                    x = conv1d(&x, bank)?;
                    relu_inplace(&mut x);
                    if b > 0 {
                        x = max_pool1d(&x, 3, 3)?;
                    }
                    features.extend(global_average(&x));
                }
            }
            (Network::FrameLevel { first, deep }, FrontEndInput::Waveform(w)) => {
                let x = self.waveform_tensor(w)?;
                let mut parts = Vec::with_capacity(first.banks.len());
                for bank in &first.banks {
                    let mut y = conv1d(&x, bank)?;
                    relu_inplace(&mut y);
                    features.extend(global_average(&y));
                    parts.push(y);
                }
                let h1 = Tensor::concat_channels(&parts)?;
                drop(parts);
                let mut h2 = conv1d(&h1, &deep[0])?;
                relu_inplace(&mut h2);
                features.extend(global_average(&h2));
                let mut c3 = conv1d(&h2, &deep[1])?;
                relu_inplace(&mut c3);
                let h3 = residual_add(&c3, &h2)?;
                features.extend(global_average(&h3));
                let p3 = max_pool1d(&h3, 2, 2)?;
                let mut c4 = conv1d(&p3, &deep[2])?;
                relu_inplace(&mut c4);
                let h4 = residual_add(&c4, &p3)?;
                features.extend(global_average(&h4));
            }
            (Network::Spectrogram(layer), FrontEndInput::LogMel(s)) => {
                wide_forward(layer, &spectrogram_tensor(s)?, &mut features)?;
            }
            (Network::Envelope(layer), FrontEndInput::Envelope(e)) => {
                wide_forward(layer, &envelope_tensor(e)?, &mut features)?;
            }
            (Network::Wide { timbral, temporal }, FrontEndInput::LogMel(s)) => {
                wide_forward(timbral, &spectrogram_tensor(s)?, &mut features)?;
                wide_forward(temporal, &envelope_tensor(&energy_envelope(s)?)?, &mut features)?;
            }
            (Network::Vgg(banks), FrontEndInput::LogMel(s)) => {
                let mut x = spectrogram_tensor(s)?;
                for (bank, &pool) in banks.iter().zip(&VGG_POOLS) {
                    // ELU is monotone, so pooling first gives identical values.
                    x = max_pool(&conv2d(&x, bank)?, pool, pool)?;
                    elu_inplace(&mut x);
                    features.extend(global_average(&x));
                }
            }
            (_, other) => invalid!(
                "{} expects {:?} input, got {:?}",
                self.spec.arch,
                self.input_kind(),
                kind_of(&other)
            ),
        }
        debug_assert_eq!(features.len(), self.dim());
        Ok(features)
    }

    /// Derives the needed representation from a prepared waveform and
    /// extracts its features.
    pub fn extract_waveform(&self, w: &Waveform) -> Result<Vec<f32>> {
        match self.input_kind() {
            InputKind::Waveform => self.extract(FrontEndInput::Waveform(w)),
            InputKind::LogMel => self.extract(FrontEndInput::LogMel(&log_mel(w)?)),
            InputKind::Envelope => {
                self.extract(FrontEndInput::Envelope(&energy_envelope(&log_mel(w)?)?))
            }
        }
    }

    /// [`extract_waveform`](Self::extract_waveform) wrapped with provenance.
    pub fn extract_features(&self, w: &Waveform) -> Result<FeatureVector> {
        Ok(FeatureVector {
            values: self.extract_waveform(w)?,
            arch: self.spec.arch,
            capacity: self.spec.capacity,
            clip_id: w.source_id.clone(),
            seed: self.spec.seed,
        })
    }

    /// VGG features where every conv output is batch-normalized with the
    /// statistics of `batch` (per channel, over clips and positions) before
    /// the ELU. Output `i` depends on every clip in the batch.
    ///
    /// Holds one block's activations for the whole batch in memory.
    pub fn extract_batch_normalized(&self, batch: &[&LogMelSpectrogram]) -> Result<Vec<Vec<f32>>> {
        let Network::Vgg(banks) = &self.network else {
            invalid!("in-network batch normalization is only implemented for vgg, not {}", self.spec.arch);
        };
        ensure!(!batch.is_empty(), "empty batch");
        let mut xs = batch.iter().map(|s| spectrogram_tensor(s)).collect::<Result<Vec<_>>>()?;
        let mut features: Vec<Vec<f32>> = (0..batch.len()).map(|_| Vec::with_capacity(self.dim())).collect();
        for (bank, &pool) in banks.iter().zip(&VGG_POOLS) {
            let ys = xs.iter().map(|x| conv2d(x, bank)).collect::<Result<Vec<_>>>()?;
            drop(xs);
            let stats = channel_stats(&ys)?;
            xs = ys
                .into_iter()
                .map(|y| {
                    let mut p = max_pool(&y, pool, pool)?;
                    apply_channel_stats(&mut p, &stats)?;
                    elu_inplace(&mut p);
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            for (f, x) in features.iter_mut().zip(&xs) {
                f.extend(global_average(x));
            }
        }
        Ok(features)
    }

    fn waveform_tensor(&self, w: &Waveform) -> Result<Tensor> {
        ensure!(
            w.is_canonical(),
            "{} expects a prepared 12 kHz, 350000-sample waveform, got {} Hz x {}",
            self.spec.arch,
            w.sample_rate,
            w.samples.len()
        );
        Tensor::new_1d(w.samples.clone(), 1, w.samples.len())
    }
}

fn kind_of(input: &FrontEndInput<'_>) -> InputKind {
    match input {
        FrontEndInput::Waveform(_) => InputKind::Waveform,
        FrontEndInput::LogMel(_) => InputKind::LogMel,
        FrontEndInput::Envelope(_) => InputKind::Envelope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{CLIP_SAMPLES, SAMPLE_RATE};
    use alloc::vec;

    fn noise(seed: u64) -> Waveform {
        let mut rng = SeededRng::new(seed, 99);
        let s = (0..CLIP_SAMPLES).map(|_| rng.symmetric_f32(0.5)).collect();
        Waveform::new(s, SAMPLE_RATE, "noise")
    }

    #[test]
    fn zero_waveform_gives_zero_sample_level_features() {
        let e = build_frontend(FrontEndSpec::new(ArchId::SampleLevel, Capacity::Small, 3)).unwrap();
        let f = e.extract_waveform(&Waveform::new(vec![0.0; CLIP_SAMPLES], SAMPLE_RATE, "z")).unwrap();
        assert_eq!(f.len(), 119);
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_spectrogram_models_have_declared_dims() {
        let w = noise(1);
        let s = log_mel(&w).unwrap();
        for arch in [ArchId::V7x96, ArchId::Temporal, ArchId::Time, ArchId::TimbralTime, ArchId::Vgg] {
            let e = build_frontend(FrontEndSpec::new(arch, Capacity::Small, 5)).unwrap();
            let f = match e.input_kind() {
                InputKind::Envelope => e.extract(FrontEndInput::Envelope(&energy_envelope(&s).unwrap())),
                _ => e.extract(FrontEndInput::LogMel(&s)),
            }
            .unwrap();
            assert_eq!(f.len(), e.dim(), "{arch}");
            assert!(f.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn repeated_extraction_is_bitwise_identical() {
        let w = noise(2);
        let spec = FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 17);
        let a = build_frontend(spec).unwrap().extract_waveform(&w).unwrap();
        let b = build_frontend(spec).unwrap().extract_waveform(&w).unwrap();
        assert_eq!(a, b);
        let c = build_frontend(FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 18))
            .unwrap()
            .extract_waveform(&w)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn wrong_input_kind_rejected() {
        let w = noise(3);
        let e = build_frontend(FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 0)).unwrap();
        assert!(e.extract(FrontEndInput::Waveform(&w)).is_err());
        let short = LogMelSpectrogram::new(vec![0.0; 100 * 96], 100, 96).unwrap();
        assert!(e.extract(FrontEndInput::LogMel(&short)).is_err());
        let t = build_frontend(FrontEndSpec::new(ArchId::SampleLevel, Capacity::Small, 0)).unwrap();
        assert!(t.extract(FrontEndInput::Waveform(&Waveform::new(vec![0.0; 10], SAMPLE_RATE, "x"))).is_err());
    }

    #[test]
    fn v7x86_pools_to_single_frequency() {
        let e = build_frontend(FrontEndSpec::new(ArchId::V7x86, Capacity::Small, 0)).unwrap();
        let bank = e.filter_banks()[0];
        let x = Tensor::zeros(1, SPEC_FRAMES, MEL_BANDS).unwrap();
        let y = conv2d(&x, bank).unwrap();
        assert_eq!(y.shape(), (120, 1376, 11));
        assert_eq!(max_pool(&y, (1, 11), (1, 11)).unwrap().shape(), (120, 1376, 1));
    }

    #[test]
    fn batch_norm_requires_vgg() {
        let e = build_frontend(FrontEndSpec::new(ArchId::Timbral, Capacity::Small, 0)).unwrap();
        let s = LogMelSpectrogram::new(vec![0.0; SPEC_FRAMES * 96], SPEC_FRAMES, 96).unwrap();
        assert!(e.extract_batch_normalized(&[&s]).is_err());
    }
}
