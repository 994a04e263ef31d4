//! Files, formats and the command-line driver around `randcnn-core`.
//!
//! * [`audio_io`]: WAV decoding into mono waveforms.
//! * [`manifest`]: dataset manifests (`clip_id,path,label,fold`).
//! * [`cache`]: the binary feature cache.
//! * [`model_io`]: saved classifiers.
//! * [`report_io`]: evaluation reports, plain text plus CSV.
//! * [`pipeline`]: parallel extraction and cross-validation.
//! * [`cli`]: the `randcnn` command.

pub mod audio_io;
mod bytes;
pub mod cache;
pub mod cli;
pub mod error;
pub mod manifest;
pub mod model_io;
pub mod pipeline;
pub mod report_io;

pub use error::{Error, Result};
