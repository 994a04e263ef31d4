use randcnn_core::dsp::{energy_envelope, log_mel, LogMelSpectrogram, Waveform, CLIP_SAMPLES, MEL_BANDS, SAMPLE_RATE, SPEC_FRAMES};
use randcnn_core::frontends::{build_frontend, feature_dimension, ArchId, Capacity, FrontEndInput, FrontEndSpec};
use randcnn_core::nn::{conv1d, conv2d, max_pool, Tensor};
use randcnn_core::rng::SeededRng;

fn noise_clip(seed: u64) -> Waveform {
    let mut rng = SeededRng::new(seed, 1);
    Waveform::new((0..CLIP_SAMPLES).map(|_| rng.symmetric_f32(0.3)).collect(), SAMPLE_RATE, format!("n{seed}"))
}

fn random_spectrogram(seed: u64) -> LogMelSpectrogram {
    let mut rng = SeededRng::new(seed, 2);
    let values = (0..SPEC_FRAMES * MEL_BANDS).map(|_| rng.symmetric_f32(4.0) - 6.0).collect();
    LogMelSpectrogram::new(values, SPEC_FRAMES, MEL_BANDS).unwrap()
}

fn features(arch: ArchId, spec: &LogMelSpectrogram, seed: u64) -> Vec<f32> {
    let e = build_frontend(FrontEndSpec::new(arch, Capacity::Small, seed)).unwrap();
    if arch == ArchId::Temporal || arch == ArchId::Time {
        e.extract(FrontEndInput::Envelope(&energy_envelope(spec).unwrap())).unwrap()
    } else {
        e.extract(FrontEndInput::LogMel(spec)).unwrap()
    }
}

#[test]
fn feature_dimension_examples() {
    let dim = |a, c| feature_dimension(&FrontEndSpec::new(a, c, 0));
    assert_eq!(dim(ArchId::Mfcc, Capacity::Small), 120);
    assert_eq!(dim(ArchId::Temporal, Capacity::Small), 4 * 30);
    assert_eq!(dim(ArchId::Timbral, Capacity::Large), 6 * 583);
    assert_eq!(dim(ArchId::Vgg, Capacity::Small), 5 * 24);
    assert_eq!(dim(ArchId::SampleLevel, Capacity::Small), 7 * 17);
}

#[test]
fn small_waveform_models_emit_declared_dims() {
    let clip = noise_clip(3);
    for (arch, want) in [(ArchId::SampleLevel, 119), (ArchId::FrameLevel, 120), (ArchId::FrameLevelMany, 120)] {
        let e = build_frontend(FrontEndSpec::new(arch, Capacity::Small, 9)).unwrap();
        let f = e.extract_features(&clip).unwrap();
        assert_eq!(f.dim(), want, "{arch}");
        assert_eq!(f.values.len(), feature_dimension(e.spec()));
        assert!(f.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn small_spectrogram_models_emit_declared_dims() {
    let s = random_spectrogram(4);
    for arch in [ArchId::V7x96, ArchId::Temporal, ArchId::Time, ArchId::TimbralTemporal, ArchId::Vgg] {
        let f = features(arch, &s, 2);
        assert_eq!(f.len(), 120, "{arch}");
        assert!(f.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn clip_order_does_not_change_features() {
    let clips = [random_spectrogram(10), random_spectrogram(11), random_spectrogram(12)];
    let e = build_frontend(FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 5)).unwrap();
    let forward: Vec<Vec<f32>> = clips.iter().map(|c| e.extract(FrontEndInput::LogMel(c)).unwrap()).collect();
    let backward: Vec<Vec<f32>> = clips.iter().rev().map(|c| e.extract(FrontEndInput::LogMel(c)).unwrap()).collect();
    for (i, f) in forward.iter().enumerate() {
        assert_eq!(f, &backward[2 - i]);
    }
}

#[test]
fn sample_level_first_layer_is_linear() {
    let e = build_frontend(FrontEndSpec::new(ArchId::SampleLevel, Capacity::Small, 21)).unwrap();
    let layer1 = e.filter_banks()[0];
    assert!(layer1.bias.iter().all(|&b| b == 0.0));
    let mut rng = SeededRng::new(8, 8);
    let x: Vec<f32> = (0..3000).map(|_| rng.symmetric_f32(1.0)).collect();
    let base = conv1d(&Tensor::new_1d(x.clone(), 1, x.len()).unwrap(), layer1).unwrap();
    // a power of two scales every product and sum exactly
    let doubled = conv1d(&Tensor::new_1d(x.iter().map(|v| v * 2.0).collect(), 1, x.len()).unwrap(), layer1).unwrap();
    assert!(base.data().iter().zip(doubled.data()).all(|(a, b)| a * 2.0 == *b));
    for alpha in [0.37f32, 3.1, 1e-3] {
        let scaled = conv1d(&Tensor::new_1d(x.iter().map(|v| v * alpha).collect(), 1, x.len()).unwrap(), layer1).unwrap();
        let scale = base.data().iter().fold(0f32, |m, v| m.max(v.abs()));
        for (a, b) in base.data().iter().zip(scaled.data()) {
            assert!((a * alpha - b).abs() <= 1e-5 * alpha * scale, "{alpha}: {a} vs {b}");
        }
    }
}

#[test]
fn vertical_filters_pool_to_unit_frequency_extent() {
    let s = random_spectrogram(5);
    let x = Tensor::new(s.values.clone(), 1, SPEC_FRAMES, MEL_BANDS).unwrap();
    for arch in [ArchId::V7x86, ArchId::Timbral] {
        let e = build_frontend(FrontEndSpec::new(arch, Capacity::Small, 1)).unwrap();
        for bank in e.filter_banks() {
            let y = conv2d(&x, bank).unwrap();
            assert_eq!(y.time(), SPEC_FRAMES, "{arch}: same padding in time");
            assert_eq!(y.freq(), MEL_BANDS - bank.shape.k_freq + 1);
            let pooled = max_pool(&y, (1, y.freq()), (1, y.freq())).unwrap();
            assert_eq!(pooled.shape(), (bank.shape.out_channels, SPEC_FRAMES, 1));
        }
    }
    let e = build_frontend(FrontEndSpec::new(ArchId::V7x86, Capacity::Small, 1)).unwrap();
    assert_eq!(conv2d(&x, e.filter_banks()[0]).unwrap().freq(), 11);
}

#[test]
fn seeds_change_weights_but_not_shapes() {
    let a = build_frontend(FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 1)).unwrap();
    let b = build_frontend(FrontEndSpec::new(ArchId::Vgg, Capacity::Small, 2)).unwrap();
    let shapes = |e: &randcnn_core::frontends::FeatureExtractor| e.filter_banks().iter().map(|f| f.shape).collect::<Vec<_>>();
    assert_eq!(shapes(&a), shapes(&b));
    assert_ne!(a.filter_banks()[0].weights, b.filter_banks()[0].weights);
}

#[test]
fn log_mel_of_real_clip_feeds_every_spectrogram_model() {
    let s = log_mel(&noise_clip(1)).unwrap();
    assert_eq!((s.time_frames, s.mel_bands), (SPEC_FRAMES, MEL_BANDS));
    assert_eq!(features(ArchId::V7x96, &s, 0).len(), 120);
}
