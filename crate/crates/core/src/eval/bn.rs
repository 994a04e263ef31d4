//! Batch-statistics leakage experiment: features are normalized with the
//! statistics of the batch each clip was processed in, then evaluated with a
//! fixed linear SVM.

use alloc::vec::Vec;
use core::fmt;

use super::cv::{run_task, CvConfig};
use super::folds::stratified_folds;
use crate::classify::{Family, HyperGrid, HyperParams, Kernel, Matrix};
use crate::dsp::LogMelSpectrogram;
use crate::error::{ensure, invalid, Result};
use crate::frontends::FeatureExtractor;
use crate::nn::batch_stat_normalize;
use crate::rng::{mix_seed, SeededRng};

/// Classifier used for every cell of the experiment.
pub const BN_CLASSIFIER: HyperParams = HyperParams::Svm { kernel: Kernel::Linear, c: 2.0 };
const ORDER_STREAM: u64 = 0x4f52_4452;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BatchOrdering {
    ClassSorted,
    Shuffled,
}

impl BatchOrdering {
    pub fn name(self) -> &'static str {
        match self {
            BatchOrdering::ClassSorted => "class_sorted",
            BatchOrdering::Shuffled => "shuffled",
        }
    }
}

impl fmt::Display for BatchOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for BatchOrdering {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "class_sorted" | "sorted" => Ok(BatchOrdering::ClassSorted),
            "shuffled" | "shuffle" => Ok(BatchOrdering::Shuffled),
            _ => invalid!("unknown batch ordering '{s}' (expected class_sorted or shuffled)"),
        }
    }
}

/// Produces the feature vectors of the clips in one batch.
pub trait BatchFeaturizer {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Features of `batch` (clip indices) for repetition `run`. With
    /// `use_bn`, outputs may depend on every clip in the batch.
    fn featurize(&self, run: usize, batch: &[usize], use_bn: bool) -> Result<Vec<Vec<f32>>>;
}

/// Fixed per-clip features; batch normalization standardizes each dimension
/// with the batch mean and deviation.
#[derive(Clone, Copy, Debug)]
pub struct PrecomputedFeatures<'a> {
    pub features: &'a [Vec<f32>],
}

impl BatchFeaturizer for PrecomputedFeatures<'_> {
    fn len(&self) -> usize {
        self.features.len()
    }

    fn featurize(&self, _run: usize, batch: &[usize], use_bn: bool) -> Result<Vec<Vec<f32>>> {
        let rows: Vec<Vec<f32>> = batch.iter().map(|&i| self.features[i].clone()).collect();
        if use_bn {
            batch_stat_normalize(&rows)
        } else {
            Ok(rows)
        }
    }
}

/// Fixed features per run (one front-end seed per run); batch
/// normalization as in [`PrecomputedFeatures`].
#[derive(Clone, Copy, Debug)]
pub struct PerRunFeatures<'a> {
    pub runs: &'a [Vec<Vec<f32>>],
}

impl BatchFeaturizer for PerRunFeatures<'_> {
    fn len(&self) -> usize {
        self.runs.first().map_or(0, Vec::len)
    }

    fn featurize(&self, run: usize, batch: &[usize], use_bn: bool) -> Result<Vec<Vec<f32>>> {
        ensure!(run < self.runs.len(), "no features for run {run}");
        PrecomputedFeatures { features: &self.runs[run] }.featurize(run, batch, use_bn)
    }
}

/// VGG front-ends (one per run) whose conv outputs are normalized with the
/// statistics of the current batch inside the network.
pub struct InNetworkBn<'a> {
    pub spectrograms: &'a [LogMelSpectrogram],
    pub extractors: &'a [FeatureExtractor],
}

impl BatchFeaturizer for InNetworkBn<'_> {
    fn len(&self) -> usize {
        self.spectrograms.len()
    }

    fn featurize(&self, run: usize, batch: &[usize], use_bn: bool) -> Result<Vec<Vec<f32>>> {
        ensure!(run < self.extractors.len(), "no extractor for run {run}");
        let e = &self.extractors[run];
        if use_bn {
            let specs: Vec<&LogMelSpectrogram> = batch.iter().map(|&i| &self.spectrograms[i]).collect();
            e.extract_batch_normalized(&specs)
        } else {
            batch
                .iter()
                .map(|&i| e.extract(crate::frontends::FrontEndInput::LogMel(&self.spectrograms[i])))
                .collect()
        }
    }
}

/// Clip order before batching.
pub fn batch_order(labels: &[usize], ordering: BatchOrdering, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    match ordering {
        BatchOrdering::ClassSorted => order.sort_by_key(|&i| (labels[i], i)),
        BatchOrdering::Shuffled => SeededRng::new(seed, ORDER_STREAM).shuffle(&mut order),
    }
    order
}

/// Consecutive batches of `size`. A trailing single clip is folded into the
/// previous batch when batch statistics are needed.
pub fn partition(order: &[usize], size: usize, use_bn: bool) -> Result<Vec<Vec<usize>>> {
    ensure!(size >= 1, "batch size must be positive");
    ensure!(!use_bn || size >= 2, "batch normalization needs batches of at least 2, got {size}");
    let mut batches: Vec<Vec<usize>> = order.chunks(size).map(|c| c.to_vec()).collect();
    if use_bn && batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let tail = batches.pop().unwrap_or_default();
        if let Some(prev) = batches.last_mut() {
            prev.extend(tail);
        }
    }
    ensure!(!use_bn || batches.iter().all(|b| b.len() >= 2), "dataset too small for batch normalization");
    Ok(batches)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnConfig {
    pub batch_sizes: Vec<usize>,
    pub orderings: Vec<BatchOrdering>,
    pub use_bn: bool,
    pub runs: usize,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnCell {
    pub batch_size: usize,
    pub ordering: BatchOrdering,
    pub use_bn: bool,
    /// Mean cross-validated accuracy of each run.
    pub accuracies: Vec<f64>,
}

impl BnCell {
    pub fn mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len().max(1) as f64
    }
}

/// Features for every clip in dataset order, built batch by batch.
pub fn batched_features<F: BatchFeaturizer + ?Sized>(
    featurizer: &F,
    labels: &[usize],
    run: usize,
    batch_size: usize,
    ordering: BatchOrdering,
    use_bn: bool,
    seed: u64,
) -> Result<Vec<Vec<f32>>> {
    let order = batch_order(labels, ordering, mix_seed(seed, run as u64));
    let mut out: Vec<Option<Vec<f32>>> = alloc::vec![None; labels.len()];
    for batch in partition(&order, batch_size, use_bn)? {
        let feats = featurizer.featurize(run, &batch, use_bn)?;
        ensure!(feats.len() == batch.len(), "featurizer returned {} rows for {} clips", feats.len(), batch.len());
        for (i, f) in batch.into_iter().zip(feats) {
            out[i] = Some(f);
        }
    }
    Ok(out.into_iter().map(|f| f.unwrap_or_default()).collect())
}

/// Accuracy per (batch size, ordering), one value per run. Within a run every
/// cell shares the fold plan, so cells differ only through their features.
pub fn bn_leakage_experiment<F: BatchFeaturizer + ?Sized>(
    featurizer: &F,
    labels: &[usize],
    classes: usize,
    cfg: &BnConfig,
) -> Result<Vec<BnCell>> {
    ensure!(featurizer.len() == labels.len(), "{} clips but {} labels", featurizer.len(), labels.len());
    ensure!(cfg.runs >= 1 && !cfg.batch_sizes.is_empty() && !cfg.orderings.is_empty(), "empty experiment");
    let mut cells: Vec<BnCell> = Vec::new();
    for &batch_size in &cfg.batch_sizes {
        for &ordering in &cfg.orderings {
            cells.push(BnCell { batch_size, ordering, use_bn: cfg.use_bn, accuracies: Vec::new() });
        }
    }
    for run in 0..cfg.runs {
        let run_seed = mix_seed(cfg.seed, run as u64);
        let cv = CvConfig::new(Family::Svm, HyperGrid::single(BN_CLASSIFIER), 1, run_seed);
        let plan = stratified_folds(labels, cfg.folds, run_seed)?;
        for cell in &mut cells {
            let feats = batched_features(featurizer, labels, run, cell.batch_size, cell.ordering, cfg.use_bn, cfg.seed)?;
            let x = Matrix::from_f32_rows(&feats)?;
            let mut total = 0.0;
            for task in cv.tasks(&plan) {
                total += run_task(&x, labels, classes, &plan, &cv, task)?.accuracy;
            }
            cell.accuracies.push(total / plan.rounds() as f64);
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_rules() {
        let order: Vec<usize> = (0..7).collect();
        assert_eq!(partition(&order, 3, true).unwrap(), [alloc::vec![0, 1, 2], alloc::vec![3, 4, 5, 6]]);
        assert_eq!(partition(&order, 3, false).unwrap().len(), 3);
        assert!(partition(&order, 1, true).is_err());
        assert!(partition(&[0], 2, true).is_err());
    }

    #[test]
    fn class_sorted_batches_are_pure() {
        let labels = [2, 0, 1, 0, 2, 1];
        let o = batch_order(&labels, BatchOrdering::ClassSorted, 0);
        assert_eq!(o, [1, 3, 2, 5, 0, 4]);
        let s = batch_order(&labels, BatchOrdering::Shuffled, 9);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn without_bn_features_are_batch_invariant() {
        let feats: Vec<Vec<f32>> = (0..12).map(|i| alloc::vec![i as f32, (i % 3) as f32]).collect();
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let f = PrecomputedFeatures { features: &feats };
        let a = batched_features(&f, &labels, 0, 2, BatchOrdering::ClassSorted, false, 1).unwrap();
        let b = batched_features(&f, &labels, 0, 5, BatchOrdering::Shuffled, false, 1).unwrap();
        assert_eq!(a, feats);
        assert_eq!(b, feats);
        let c = batched_features(&f, &labels, 0, 4, BatchOrdering::ClassSorted, true, 1).unwrap();
        assert_ne!(c, feats);
    }
}
