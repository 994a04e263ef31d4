//! The `randcnn` command line. [`run`] returns the process exit code:
//! 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use randcnn_core::classify::{grid_search, Classifier, Family, HyperGrid, Matrix, Split};
use randcnn_core::eval::{
    bn_leakage_experiment, mean_std, one_way_anova, stratified_holdout, welch_t_test, BatchOrdering, BnCell,
    BnConfig, CvConfig, InNetworkBn, PrecomputedFeatures, ReportMeta, SplitTag, SynthTask, SyntheticSpec,
};
use randcnn_core::frontends::{build_frontend, feature_dimension, ArchId, Capacity, FrontEndSpec};
use randcnn_core::rng::mix_seed;

use crate::cache::{read_cache, write_cache, FeatureCache};
use crate::error::{Error, Result};
use crate::manifest::{parse_manifest, DatasetManifest, FoldTag};
use crate::model_io::{read_model, write_model, SavedModel};
use crate::pipeline;
use crate::report_io::{read_report, write_report};

#[derive(Parser, Debug)]
#[command(name = "randcnn", version, about = "Random-weight CNN audio features and shallow classifiers")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract random-CNN features for every clip of a manifest.
    Extract(ExtractArgs),
    /// Extract the MFCC baseline vector for every clip of a manifest.
    Mfcc(MfccArgs),
    /// Cross-validate a classifier on cached features.
    Evaluate(EvaluateArgs),
    /// List the hyperparameter grid.
    Grid(GridArgs),
    /// Compare evaluation reports.
    Stats(StatsArgs),
    /// Accuracy as a function of batch size and batch ordering.
    BnExperiment(BnArgs),
    /// Write a synthetic dataset (WAV files plus manifest.csv).
    Synth(SynthArgs),
    /// Fit one classifier on the non-test clips and save it.
    Train(TrainArgs),
    /// Predict labels with a saved classifier.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub arch: ArchId,
    #[arg(long, default_value = "s")]
    pub capacity: Capacity,
    #[arg(long, env = "RWC_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MfccArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub classifier: Family,
    #[arg(long, value_enum, default_value = "default")]
    pub grid: GridChoice,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// Folds for manifests without predefined folds or splits.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, env = "RWC_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridChoice {
    Default,
}

impl GridChoice {
    fn grid(self) -> HyperGrid {
        match self {
            GridChoice::Default => HyperGrid::default(),
        }
    }
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Only this family.
    #[arg(long)]
    pub classifier: Option<Family>,
    /// Feature dimension used to resolve γ = 1/features.
    #[arg(long, default_value_t = 120)]
    pub features: usize,
    #[arg(long, value_enum, default_value = "default")]
    pub grid: GridChoice,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(subcommand)]
    pub test: StatsTest,
}

#[derive(Subcommand, Debug)]
pub enum StatsTest {
    /// Welch t-test between two reports.
    Ttest(StatsInput),
    /// One-way ANOVA across two or more reports.
    Anova(StatsInput),
}

#[derive(Args, Debug)]
pub struct StatsInput {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Compare per-run means or individual fold accuracies.
    #[arg(long, value_enum, default_value = "runs")]
    pub level: Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Runs,
    Folds,
}

#[derive(Args, Debug)]
pub struct BnArgs {
    /// Cached features, normalized after extraction. Without it, VGG
    /// features are recomputed from the manifest audio with batch
    /// normalization inside the network.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2,10,50")]
    pub batch_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "class_sorted,shuffled")]
    pub ordering: Vec<BatchOrdering>,
    #[arg(long, value_enum, default_value = "both")]
    pub bn: BnMode,
    /// Network capacity for in-network normalization.
    #[arg(long, default_value = "s")]
    pub capacity: Capacity,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, env = "RWC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write per-run accuracies as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BnMode {
    On,
    Off,
    Both,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub task: SynthTask,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to 10 for timbre and 4 for rhythm.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub clips_per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, env = "RWC_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub classifier: Family,
    #[arg(long, value_enum, default_value = "default")]
    pub grid: GridChoice,
    #[arg(long, env = "RWC_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Labels to score the predictions against.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// CSV of `clip_id,label`; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let workers = cli.workers;
    let text = match &cli.command {
        Command::Extract(a) => extract(&a.manifest, FrontEndSpec::new(a.arch, a.capacity, a.seed), &a.out, workers)?,
        Command::Mfcc(a) => extract(&a.manifest, FrontEndSpec::new(ArchId::Mfcc, Capacity::Small, 0), &a.out, workers)?,
        Command::Evaluate(a) => evaluate(a, workers)?,
        Command::Grid(a) => grid(a),
        Command::Stats(a) => stats(a)?,
        Command::BnExperiment(a) => bn_experiment(a, workers)?,
        Command::Synth(a) => synth(a, workers)?,
        Command::Train(a) => train(a)?,
        Command::Predict(a) => predict(a)?,
    };
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn extract(manifest: &Path, spec: FrontEndSpec, out: &Path, workers: usize) -> Result<String> {
    let m = parse_manifest(manifest)?;
    let fv = pipeline::extract_manifest(&m, spec, workers)?;
    let dim = feature_dimension(&spec);
    let cache = FeatureCache::from_features(spec.arch, spec.capacity, spec.seed, dim, fv)?;
    write_cache(out, &cache)?;
    Ok(format!(
        "wrote {} records of dim {dim} ({} {}, seed {}) to {}\n",
        cache.records.len(),
        spec.arch,
        spec.capacity,
        spec.seed,
        out.display()
    ))
}

/// Cached features in manifest order with label indices.
fn load_dataset(features: &Path, manifest: &Path) -> Result<(FeatureCache, DatasetManifest, Matrix, Vec<usize>)> {
    let cache = read_cache(features)?;
    let m = parse_manifest(manifest)?;
    let rows = pipeline::features_for_manifest(&cache, &m)?;
    let x = if rows.is_empty() {
        Matrix::zeros(0, cache.dim as usize)
    } else {
        Matrix::from_f32_rows(&rows)?
    };
    let labels = m.label_indices();
    Ok((cache, m, x, labels))
}

fn cache_names(c: &FeatureCache) -> (String, String) {
    let arch = c.arch_id().map_or_else(|| format!("code{}", c.arch), |a| a.to_string());
    let cap = if c.arch_id() == Some(ArchId::Mfcc) {
        "-".to_string()
    } else {
        c.capacity_id().map_or_else(|| format!("code{}", c.capacity), |a| a.to_string())
    };
    (arch, cap)
}

fn evaluate(a: &EvaluateArgs, workers: usize) -> Result<String> {
    let (cache, m, x, labels) = load_dataset(&a.features, &a.manifest)?;
    let classes = m.class_names().len();
    let plan = m.fold_plan(a.folds, a.seed)?;
    let grid = a.grid.grid();
    let cfg = CvConfig::new(a.classifier, grid.clone(), a.runs, a.seed);
    let (arch, capacity) = cache_names(&cache);
    let meta = ReportMeta { arch, capacity, classifier: a.classifier.to_string(), seed: a.seed };
    let report = pipeline::evaluate(&x, &labels, classes, &plan, &cfg, meta, workers)?;
    let extra = [
        ("dataset", m.name.clone()),
        ("clips", m.len().to_string()),
        ("classes", classes.to_string()),
        ("dim", cache.dim.to_string()),
        ("feature_seed", cache.seed.to_string()),
    ];
    let points = grid.points(a.classifier, x.cols());
    write_report(&a.report, &report, &points, &extra)?;
    Ok(format!(
        "{} {} {}: accuracy {:.4} ± {:.4} over {} runs ({} grid points), report {}\n",
        report.meta.arch,
        report.meta.capacity,
        report.meta.classifier,
        report.mean,
        report.std,
        report.runs,
        points.len(),
        a.report.display()
    ))
}

fn grid(a: &GridArgs) -> String {
    let g = a.grid.grid();
    let families = match a.classifier {
        Some(f) => vec![f],
        None => vec![Family::Svm, Family::Elm],
    };
    let mut s = String::new();
    for f in families {
        let points = g.points(f, a.features);
        let _ = writeln!(s, "# {f}: {} points", points.len());
        for p in points {
            let _ = writeln!(s, "{p}");
        }
    }
    s
}

fn stats(a: &StatsArgs) -> Result<String> {
    let (input, is_ttest) = match &a.test {
        StatsTest::Ttest(i) => (i, true),
        StatsTest::Anova(i) => (i, false),
    };
    let groups = input
        .reports
        .iter()
        .map(|p| {
            let r = read_report(p)?;
            Ok(match input.level {
                Level::Runs => r.run_means(),
                Level::Folds => r.fold_accuracies(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::new();
    for (p, g) in input.reports.iter().zip(&groups) {
        let (m, sd) = mean_std(g);
        let _ = writeln!(s, "{}: n = {} mean = {m:.6} std = {sd:.6}", p.display(), g.len());
    }
    if is_ttest {
        if groups.len() != 2 {
            return Err(Error::Data(format!("ttest needs exactly 2 reports, got {}", groups.len())));
        }
        let t = welch_t_test(&groups[0], &groups[1])?;
        let _ = writeln!(s, "welch t = {} dof = {} p = {}", t.t, t.dof, t.p);
    } else {
        let r = one_way_anova(&groups.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        let _ = writeln!(s, "anova F = {} df = ({}, {}) p = {}", r.f, r.df_between, r.df_within, r.p);
    }
    Ok(s)
}

fn bn_experiment(a: &BnArgs, workers: usize) -> Result<String> {
    let m = parse_manifest(&a.manifest)?;
    let labels = m.label_indices();
    let classes = m.class_names().len();
    let modes: &[bool] = match a.bn {
        BnMode::On => &[true],
        BnMode::Off => &[false],
        BnMode::Both => &[false, true],
    };
    let cfg = |use_bn| BnConfig {
        batch_sizes: a.batch_sizes.clone(),
        orderings: a.ordering.clone(),
        use_bn,
        runs: a.runs,
        folds: a.folds,
        seed: a.seed,
    };
    let mut cells: Vec<BnCell> = Vec::new();
    let mode;
    if let Some(features) = &a.features {
        mode = "normalized cached features";
        let cache = read_cache(features)?;
        let rows = pipeline::features_for_manifest(&cache, &m)?;
        let f = PrecomputedFeatures { features: &rows };
        for &bn in modes {
            cells.extend(bn_leakage_experiment(&f, &labels, classes, &cfg(bn))?);
        }
    } else {
        mode = "in-network vgg";
        let specs = pipeline::spectrograms(&m, workers)?;
        let extractors = (0..a.runs)
            .map(|r| build_frontend(FrontEndSpec::new(ArchId::Vgg, a.capacity, mix_seed(a.seed, r as u64))))
            .collect::<Result<Vec<_>, _>>()?;
        let f = InNetworkBn { spectrograms: &specs, extractors: &extractors };
        for &bn in modes {
            cells.extend(bn_leakage_experiment(&f, &labels, classes, &cfg(bn))?);
        }
    }
    if let Some(path) = &a.out {
        std::fs::write(path, bn_csv(&cells)).map_err(|e| Error::io(path, e))?;
    }
    let mut s = format!("# batch normalization experiment: {mode}, {} clips, {} runs\n", m.len(), a.runs);
    s.push_str("bn\tbatch\tordering\tmean\taccuracies\n");
    for c in &cells {
        let accs: Vec<String> = c.accuracies.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.4}\t{}",
            if c.use_bn { "on" } else { "off" },
            c.batch_size,
            c.ordering,
            c.mean(),
            accs.join(",")
        );
    }
    for &bn in modes {
        let groups: Vec<Vec<f64>> = a
            .batch_sizes
            .iter()
            .map(|&b| {
                cells.iter().filter(|c| c.use_bn == bn && c.batch_size == b).flat_map(|c| c.accuracies.clone()).collect()
            })
            .collect();
        if groups.len() >= 2 {
            let r = one_way_anova(&groups.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
            let _ = writeln!(s, "anova across batch sizes (bn {}): F = {} p = {}", if bn { "on" } else { "off" }, r.f, r.p);
        }
    }
    Ok(s)
}

fn bn_csv(cells: &[BnCell]) -> String {
    let mut s = String::from("bn,batch_size,ordering,run,accuracy\n");
    for c in cells {
        for (run, acc) in c.accuracies.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{run},{acc}", c.use_bn, c.batch_size, c.ordering);
        }
    }
    s
}

fn synth(a: &SynthArgs, workers: usize) -> Result<String> {
    let classes = a.classes.unwrap_or(match a.task {
        SynthTask::Timbre => 10,
        SynthTask::Rhythm => 4,
    });
    let spec = SyntheticSpec::new(a.task, classes, a.clips_per_class, a.seed);
    spec.validate()?;
    let m = pipeline::write_synthetic(&spec, &a.out, a.folds, workers)?;
    Ok(format!("wrote {} {} clips and manifest.csv to {}\n", m.len(), a.task, a.out.display()))
}

fn train(a: &TrainArgs) -> Result<String> {
    let (_, m, x, labels) = load_dataset(&a.features, &a.manifest)?;
    let class_names = m.class_names();
    let classes = class_names.len();
    let rows: Vec<usize> = (0..m.len()).filter(|&i| m.rows[i].fold != FoldTag::Split(SplitTag::Test)).collect();
    let split = if m.split_sizes().is_some() {
        let train = rows.iter().copied().filter(|&i| m.rows[i].fold == FoldTag::Split(SplitTag::Train)).collect();
        let valid = rows.iter().copied().filter(|&i| m.rows[i].fold == FoldTag::Split(SplitTag::Valid)).collect();
        Split { train, valid }
    } else {
        stratified_holdout(&rows, &labels, 0.2, a.seed)?
    };
    let points = a.grid.grid().points(a.classifier, x.cols());
    let best = if points.len() == 1 {
        points[0]
    } else {
        grid_search(&x, &labels, classes, &[split], a.classifier, &a.grid.grid(), a.seed)?.best
    };
    let fit_x = x.select_rows(&rows);
    let fit_y: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let classifier = Classifier::fit(best, &fit_x, &fit_y, classes, a.seed)?;
    write_model(&a.out, &SavedModel { classifier, class_names })?;
    Ok(format!("trained {best} on {} clips, model {}\n", rows.len(), a.out.display()))
}

fn predict(a: &PredictArgs) -> Result<String> {
    let model = read_model(&a.model)?;
    let cache = read_cache(&a.features)?;
    let (ids, rows): (Vec<String>, Vec<Vec<f32>>) = match &a.manifest {
        Some(p) => {
            let m = parse_manifest(p)?;
            let rows = pipeline::features_for_manifest(&cache, &m)?;
            (m.rows.iter().map(|r| r.clip_id.clone()).collect(), rows)
        }
        None => cache.records.iter().map(|r| (r.clip_id.clone(), r.values.clone())).unzip(),
    };
    let pred = if rows.is_empty() { Vec::new() } else { model.classifier.predict(&Matrix::from_f32_rows(&rows)?)? };
    let mut csv = String::from("clip_id,label\n");
    for (id, &p) in ids.iter().zip(&pred) {
        let _ = writeln!(csv, "{id},{}", model.class_names[p]);
    }
    let mut s = String::new();
    if let Some(p) = &a.manifest {
        let m = parse_manifest(p)?;
        let hits = m.rows.iter().zip(&pred).filter(|(r, &p)| r.label == model.class_names[p]).count();
        if !pred.is_empty() {
            let _ = writeln!(s, "accuracy {:.4} ({hits}/{})", hits as f64 / pred.len() as f64, pred.len());
        }
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
            let _ = writeln!(s, "wrote {} predictions to {}", pred.len(), path.display());
        }
        None => s.insert_str(0, &csv),
    }
    Ok(s)
}
