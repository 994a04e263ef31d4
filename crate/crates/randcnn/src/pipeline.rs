//! Parallel drivers over manifests. Output order always follows the input
//! order, whatever the worker count.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use randcnn_core::classify::Matrix;
use randcnn_core::dsp::{log_mel, prepare_waveform, LogMelSpectrogram};
use randcnn_core::eval::{stratified_folds, CvConfig, EvalReport, FoldPlan, ReportMeta, SyntheticSpec};
use randcnn_core::eval::{run_task, validate_inputs, Assignment};
use randcnn_core::frontends::{build_frontend, FeatureVector, FrontEndSpec};

use crate::audio_io::{load_audio, write_wav_f32};
use crate::cache::FeatureCache;
use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, FoldTag, ManifestRow};

/// Runs `f` on a dedicated pool of `workers` threads (0 = one per CPU).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Loads, prepares and extracts every clip of the manifest.
pub fn extract_manifest(m: &DatasetManifest, spec: FrontEndSpec, workers: usize) -> Result<Vec<FeatureVector>> {
    let extractor = build_frontend(spec)?;
    with_workers(workers, || {
        m.rows
            .par_iter()
            .map(|row| {
                let w = prepare_waveform(&load_audio(&row.path)?)?;
                let mut f = extractor.extract_features(&w)?;
                f.clip_id = row.clip_id.clone();
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Log-mel spectrograms of every clip of the manifest.
pub fn spectrograms(m: &DatasetManifest, workers: usize) -> Result<Vec<LogMelSpectrogram>> {
    with_workers(workers, || {
        m.rows
            .par_iter()
            .map(|row| Ok(log_mel(&prepare_waveform(&load_audio(&row.path)?)?)?))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Cached vectors in manifest order, matched by clip id.
pub fn features_for_manifest(cache: &FeatureCache, m: &DatasetManifest) -> Result<Vec<Vec<f32>>> {
    let index: HashMap<&str, usize> = cache.records.iter().enumerate().map(|(i, r)| (r.clip_id.as_str(), i)).collect();
    m.rows
        .iter()
        .map(|row| {
            index
                .get(row.clip_id.as_str())
                .map(|&i| cache.records[i].values.clone())
                .ok_or_else(|| Error::Data(format!("clip '{}' is in the manifest but not in the feature cache", row.clip_id)))
        })
        .collect()
}

/// Cross-validation with (run, fold) tasks spread over the pool.
pub fn evaluate(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    plan: &FoldPlan,
    cfg: &CvConfig,
    meta: ReportMeta,
    workers: usize,
) -> Result<EvalReport> {
    validate_inputs(x, labels, classes, plan)?;
    if cfg.runs == 0 {
        return Err(Error::Data("need at least one run".into()));
    }
    let tasks = cfg.tasks(plan);
    let results = with_workers(workers, || {
        tasks.par_iter().map(|&t| run_task(x, labels, classes, plan, cfg, t)).collect::<Result<Vec<_>, _>>()
    })??;
    Ok(EvalReport::from_results(results, meta)?)
}

/// Writes the clips of a synthetic task as 32-bit float WAV files plus a
/// `manifest.csv` with `folds` stratified folds (numbered from 1).
pub fn write_synthetic(spec: &SyntheticSpec, dir: &Path, folds: usize, workers: usize) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels = spec.labels();
    let plan = stratified_folds(&labels, folds, spec.seed)?;
    let Assignment::Folds(fold_of) = &plan.assignment else {
        unreachable!("stratified plans are fold plans")
    };
    let rows = with_workers(workers, || {
        (0..spec.len())
            .into_par_iter()
            .map(|i| {
                let w = spec.clip(i)?;
                let file = format!("{}.wav", w.source_id);
                write_wav_f32(&dir.join(&file), &w)?;
                Ok(ManifestRow {
                    clip_id: w.source_id.clone(),
                    path: file.into(),
                    label: format!("{}{}", spec.task, labels[i]),
                    fold: FoldTag::Fold(fold_of[i] as u32 + 1),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let m = DatasetManifest { name: spec.task.to_string(), rows };
    let path = dir.join("manifest.csv");
    std::fs::write(&path, m.to_csv()).map_err(|e| Error::io(&path, e))?;
    Ok(m)
}
