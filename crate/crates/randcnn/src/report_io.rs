//! Evaluation reports: a key/value text file with a `[grid]` listing and a
//! `[folds]` table, plus a CSV of the fold table next to it (`<report>.csv`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use randcnn_core::classify::HyperParams;
use randcnn_core::eval::EvalReport;

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "# randcnn evaluation report";

/// Text form of a report. Contains nothing time- or host-dependent.
pub fn render_report(r: &EvalReport, grid: &[HyperParams], extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{REPORT_HEADER}");
    let kv: [(&str, String); 9] = [
        ("arch", r.meta.arch.clone()),
        ("capacity", r.meta.capacity.clone()),
        ("classifier", r.meta.classifier.clone()),
        ("seed", r.meta.seed.to_string()),
        ("runs", r.runs.to_string()),
        ("folds_per_run", (r.folds.len() / r.runs.max(1)).to_string()),
        ("mean_accuracy", r.mean.to_string()),
        ("std_accuracy", r.std.to_string()),
        ("best", r.best.to_string()),
    ];
    for (k, v) in kv.iter().chain(extra) {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "grid_points = {}", grid.len());
    let _ = writeln!(s, "\n[grid]");
    for p in grid {
        let _ = writeln!(s, "{p}");
    }
    let _ = writeln!(s, "\n[folds]");
    let _ = writeln!(s, "run\tfold\taccuracy\ttrain\ttest\tbest");
    for f in &r.folds {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", f.run, f.fold, f.accuracy, f.train_size, f.test_size, f.best);
    }
    s
}

pub fn render_csv(r: &EvalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["run", "fold", "accuracy", "train_size", "test_size", "best"]).map_err(csv_err)?;
    for f in &r.folds {
        w.write_record([
            f.run.to_string(),
            f.fold.to_string(),
            f.accuracy.to_string(),
            f.train_size.to_string(),
            f.test_size.to_string(),
            f.best.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// `<report>.csv` next to the text report.
pub fn csv_path(report: &Path) -> PathBuf {
    let mut p = report.as_os_str().to_owned();
    p.push(".csv");
    PathBuf::from(p)
}

/// Writes both the text report and its CSV companion.
pub fn write_report(path: &Path, r: &EvalReport, grid: &[HyperParams], extra: &[(&str, String)]) -> Result<()> {
    std::fs::write(path, render_report(r, grid, extra)).map_err(|e| Error::io(path, e))?;
    let csv = csv_path(path);
    std::fs::write(&csv, render_csv(r)?).map_err(|e| Error::io(&csv, e))
}

/// A report read back for significance testing.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub values: BTreeMap<String, String>,
    /// `(run, fold, accuracy)` rows.
    pub folds: Vec<(usize, usize, f64)>,
}

impl ParsedReport {
    /// Mean accuracy of each run, in run order.
    pub fn run_means(&self) -> Vec<f64> {
        let runs = self.folds.iter().map(|f| f.0).max().map_or(0, |m| m + 1);
        (0..runs)
            .filter_map(|r| {
                let v: Vec<f64> = self.folds.iter().filter(|f| f.0 == r).map(|f| f.2).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }

    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.2).collect()
    }
}

pub fn parse_report(text: &str, origin: &Path) -> Result<ParsedReport> {
    let bad = |line: usize, reason: String| Error::Parse { path: origin.into(), line, reason };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(bad(1, "not a randcnn report".into())),
    }
    let mut values = BTreeMap::new();
    let mut folds = Vec::new();
    let mut section = "";
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = if line == "[folds]" { "folds" } else { "other" };
            continue;
        }
        match section {
            "" => {
                let (k, v) = line.split_once(" = ").ok_or_else(|| bad(i + 1, format!("expected 'key = value', got '{line}'")))?;
                values.insert(k.to_string(), v.to_string());
            }
            "folds" if line.starts_with("run\t") => {}
            "folds" => {
                let cols: Vec<&str> = line.split('\t').collect();
                let parse = || -> Option<(usize, usize, f64)> {
                    Some((cols.first()?.parse().ok()?, cols.get(1)?.parse().ok()?, cols.get(2)?.parse().ok()?))
                };
                folds.push(parse().ok_or_else(|| bad(i + 1, format!("malformed fold row '{line}'")))?);
            }
            _ => {}
        }
    }
    if folds.is_empty() {
        return Err(bad(0, "report has no fold rows".into()));
    }
    Ok(ParsedReport { values, folds })
}

pub fn read_report(path: &Path) -> Result<ParsedReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text, path)
}
