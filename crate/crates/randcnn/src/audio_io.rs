//! WAV decoding to mono `f32`.

use std::path::Path;

use randcnn_core::dsp::Waveform;

use crate::error::{Error, Result};

/// Reads a PCM WAV file (8/16/24/32-bit integer or 32-bit float, any
/// channel count) and averages the channels. Integer samples are divided by
/// `2^(bits-1)`, so int16 maps `-32768` to exactly `-1.0`.
pub fn load_audio(path: &Path) -> Result<Waveform> {
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Audio { path: path.into(), reason: "zero channels".into() });
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedFormat {
                    path: path.into(),
                    reason: format!("{}-bit float", spec.bits_per_sample),
                });
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(|v| v as f64))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| ((frame.iter().sum::<f64>() / channels as f64) as f32).clamp(-1.0, 1.0))
        .collect();
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Waveform::new(samples, spec.sample_rate, id))
}

/// Writes a mono 32-bit float WAV.
pub fn write_wav_f32(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut out = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in &w.samples {
        out.write_sample(s).map_err(|e| wav_error(path, e))?;
    }
    out.finalize().map_err(|e| wav_error(path, e))
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        hound::Error::Unsupported => {
            Error::UnsupportedFormat { path: path.into(), reason: "compressed or non-PCM encoding".into() }
        }
        other => Error::Audio { path: path.into(), reason: other.to_string() },
    }
}
