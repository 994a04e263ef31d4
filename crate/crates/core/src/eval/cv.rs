//! Cross-validated evaluation with inner grid search.

use alloc::string::String;
use alloc::vec::Vec;

use super::folds::{stratified_holdout, FoldPlan};
use super::metrics::{accuracy, mean_std};
use crate::classify::{grid_search, Classifier, Family, HyperGrid, HyperParams, Matrix, Split};
use crate::error::{ensure, Result};
use crate::rng::mix_seed;

/// Share of the training rows held out for grid search on k-fold plans.
pub const INNER_VALIDATION_FRACTION: f64 = 0.2;

/// Classifier family, grid and repetition settings of an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CvConfig {
    pub family: Family,
    pub grid: HyperGrid,
    pub runs: usize,
    pub seed: u64,
}

impl CvConfig {
    pub fn new(family: Family, grid: HyperGrid, runs: usize, seed: u64) -> Self {
        Self { family, grid, runs, seed }
    }

    /// All (run, round) tasks; run `r` uses seed `mix_seed(seed, r)`.
    pub fn tasks(&self, plan: &FoldPlan) -> Vec<CvTask> {
        let seed = self.seed;
        (0..self.runs)
            .flat_map(|run| (0..plan.rounds()).map(move |fold| CvTask { run, fold, seed: mix_seed(seed, run as u64) }))
            .collect()
    }
}

/// One (run, round) unit of work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CvTask {
    pub run: usize,
    pub fold: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub run: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub best: HyperParams,
    pub train_size: usize,
    pub test_size: usize,
    /// Digest of the standardizer fitted on this round's training rows.
    pub standardizer_checksum: u64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ReportMeta {
    pub arch: String,
    pub capacity: String,
    pub classifier: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    /// Mean of the per-run mean accuracies.
    pub mean: f64,
    /// Sample standard deviation of the per-run mean accuracies.
    pub std: f64,
    pub runs: usize,
    /// Most frequently selected configuration; ties go to the first
    /// selected.
    pub best: HyperParams,
    pub meta: ReportMeta,
}

impl EvalReport {
    /// Aggregates fold results, which may arrive in any order.
    pub fn from_results(mut folds: Vec<FoldResult>, meta: ReportMeta) -> Result<Self> {
        ensure!(!folds.is_empty(), "no fold results to aggregate");
        folds.sort_by_key(|f| (f.run, f.fold));
        let runs = folds.iter().map(|f| f.run).max().unwrap_or(0) + 1;
        let per_run: Vec<f64> = (0..runs)
            .filter_map(|r| {
                let v: Vec<f64> = folds.iter().filter(|f| f.run == r).map(|f| f.accuracy).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        let (mean, std) = mean_std(&per_run);
        let mut counts: Vec<(HyperParams, usize)> = Vec::new();
        for f in &folds {
            match counts.iter_mut().find(|(p, _)| *p == f.best) {
                Some(e) => e.1 += 1,
                None => counts.push((f.best, 1)),
            }
        }
        let mut best = counts[0];
        for &c in &counts {
            if c.1 > best.1 {
                best = c;
            }
        }
        Ok(Self { folds, mean, std, runs, best: best.0, meta })
    }

    /// Mean accuracy of each run.
    pub fn run_means(&self) -> Vec<f64> {
        (0..self.runs)
            .map(|r| {
                let v: Vec<f64> = self.folds.iter().filter(|f| f.run == r).map(|f| f.accuracy).collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect()
    }
}

/// Evaluates one task: grid search on a validation split (the plan's own for
/// fixed splits, a stratified carve-out of the training rows otherwise), then
/// fits on the training rows and scores the held-out rows.
pub fn run_task(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    plan: &FoldPlan,
    cfg: &CvConfig,
    task: CvTask,
) -> Result<FoldResult> {
    let (family, grid) = (cfg.family, &cfg.grid);
    let (train, test) = plan.round(task.fold);
    ensure!(!train.is_empty() && !test.is_empty(), "round {} has an empty side", task.fold);
    let points = grid.points(family, x.cols());
    ensure!(!points.is_empty(), "empty {family} grid");
    let best = if points.len() == 1 {
        points[0]
    } else {
        let split = match plan.fixed_validation() {
            Some(valid) if !valid.is_empty() => Split { train: train.clone(), valid },
            _ => stratified_holdout(&train, labels, INNER_VALIDATION_FRACTION, mix_seed(task.seed, task.fold as u64))?,
        };
        grid_search(x, labels, classes, &[split], family, grid, task.seed)?.best
    };
    let xt = x.select_rows(&train);
    let yt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let model = Classifier::fit(best, &xt, &yt, classes, task.seed)?;
    let pred = model.predict(&x.select_rows(&test))?;
    let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    Ok(FoldResult {
        run: task.run,
        fold: task.fold,
        accuracy: accuracy(&pred, &truth)?,
        best,
        train_size: train.len(),
        test_size: test.len(),
        standardizer_checksum: model.standardizer.checksum(),
    })
}

/// Sequential cross-validation over every task.
pub fn cross_validate(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    plan: &FoldPlan,
    cfg: &CvConfig,
    meta: ReportMeta,
) -> Result<EvalReport> {
    validate_inputs(x, labels, classes, plan)?;
    ensure!(cfg.runs >= 1, "need at least one run");
    let results = cfg
        .tasks(plan)
        .into_iter()
        .map(|t| run_task(x, labels, classes, plan, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_results(results, meta)
}

pub fn validate_inputs(x: &Matrix, labels: &[usize], classes: usize, plan: &FoldPlan) -> Result<()> {
    ensure!(x.rows() == labels.len(), "{} feature rows but {} labels", x.rows(), labels.len());
    ensure!(plan.len() == labels.len(), "fold plan covers {} rows, dataset has {}", plan.len(), labels.len());
    ensure!(labels.iter().all(|&l| l < classes), "label out of range for {classes} classes");
    ensure!(x.is_finite(), "features contain non-finite values");
    Ok(())
}
