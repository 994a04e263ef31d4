//! CSV dataset manifests: `clip_id,path,label,fold`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use randcnn_core::eval::{stratified_folds, FoldPlan, SplitTag};

use crate::error::{Error, Result};

pub const MANIFEST_COLUMNS: [&str; 4] = ["clip_id", "path", "label", "fold"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FoldTag {
    /// Fold number as written in the file.
    Fold(u32),
    Split(SplitTag),
    /// Empty cell: folds are generated by the tool.
    Unassigned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub clip_id: String,
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    pub label: String,
    pub fold: FoldTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub rows: Vec<ManifestRow>,
}

pub fn parse_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_manifest_str(&text, path, base, name)
}

/// Parses manifest text. `origin` only labels error messages.
pub fn parse_manifest_str(text: &str, origin: &Path, base: &Path, name: String) -> Result<DatasetManifest> {
    let err = |line: usize, reason: String| Error::Parse { path: origin.into(), line, reason };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let mut col = [0usize; 4];
    for (k, name) in MANIFEST_COLUMNS.iter().enumerate() {
        col[k] = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| err(1, format!("missing column '{name}' (header must contain {})", MANIFEST_COLUMNS.join(","))))?;
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| rec.get(col[k]).unwrap_or("").to_string();
        let clip_id = field(0);
        if clip_id.is_empty() {
            return Err(err(line, "empty clip_id".into()));
        }
        if let Some(first) = seen.insert(clip_id.clone(), line) {
            return Err(err(line, format!("duplicate clip_id '{clip_id}' (first on line {first})")));
        }
        let label = field(2);
        if label.is_empty() {
            return Err(err(line, format!("empty label for '{clip_id}'")));
        }
        let raw_path = field(1);
        if raw_path.is_empty() {
            return Err(err(line, format!("empty path for '{clip_id}'")));
        }
        let p = PathBuf::from(&raw_path);
        let path = if p.is_absolute() { p } else { base.join(p) };
        let fold = parse_fold(&field(3)).map_err(|r| err(line, r))?;
        rows.push(ManifestRow { clip_id, path, label, fold });
        lines.push(line);
    }
    let kinds: BTreeSet<u8> = rows
        .iter()
        .map(|r| match r.fold {
            FoldTag::Fold(_) => 0,
            FoldTag::Split(_) => 1,
            FoldTag::Unassigned => 2,
        })
        .collect();
    if kinds.len() > 1 {
        let line = rows
            .iter()
            .zip(&lines)
            .find(|(r, _)| std::mem::discriminant(&r.fold) != std::mem::discriminant(&rows[0].fold))
            .map_or(0, |(_, &l)| l);
        return Err(err(line, "fold column mixes fold numbers, split tags and empty cells".into()));
    }
    Ok(DatasetManifest { name, rows })
}

fn parse_fold(s: &str) -> Result<FoldTag, String> {
    if s.is_empty() {
        return Ok(FoldTag::Unassigned);
    }
    if let Ok(n) = s.parse::<u32>() {
        return Ok(FoldTag::Fold(n));
    }
    s.parse::<SplitTag>()
        .map(FoldTag::Split)
        .map_err(|_| format!("fold '{s}' is neither an integer nor one of train, valid, test"))
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted distinct label names.
    pub fn class_names(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.label.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Label indices into [`class_names`](Self::class_names).
    pub fn label_indices(&self) -> Vec<usize> {
        let names = self.class_names();
        self.rows.iter().map(|r| names.binary_search(&r.label).unwrap_or(0)).collect()
    }

    /// (train, valid, test) counts for split-tagged manifests.
    pub fn split_sizes(&self) -> Option<(usize, usize, usize)> {
        if !matches!(self.rows.first()?.fold, FoldTag::Split(_)) {
            return None;
        }
        let c = |t| self.rows.iter().filter(|r| r.fold == FoldTag::Split(t)).count();
        Some((c(SplitTag::Train), c(SplitTag::Valid), c(SplitTag::Test)))
    }

    /// The manifest's folds or splits; empty fold cells get `k` seeded
    /// stratified folds. Fold numbers are renumbered to `0..k` in
    /// ascending order, so 1-based manifests work unchanged.
    pub fn fold_plan(&self, k: usize, seed: u64) -> Result<FoldPlan> {
        if self.rows.is_empty() {
            return Err(Error::Data("manifest has no rows".into()));
        }
        Ok(match self.rows[0].fold {
            FoldTag::Unassigned => stratified_folds(&self.label_indices(), k, seed)?,
            FoldTag::Split(_) => FoldPlan::fixed(
                self.rows.iter().map(|r| if let FoldTag::Split(t) = r.fold { t } else { SplitTag::Train }).collect(),
            )?,
            FoldTag::Fold(_) => {
                let distinct: Vec<u32> = self
                    .rows
                    .iter()
                    .filter_map(|r| if let FoldTag::Fold(f) = r.fold { Some(f) } else { None })
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                FoldPlan::from_folds(
                    self.rows
                        .iter()
                        .map(|r| match r.fold {
                            FoldTag::Fold(f) => distinct.binary_search(&f).unwrap_or(0),
                            _ => 0,
                        })
                        .collect(),
                )?
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(MANIFEST_COLUMNS);
        for r in &self.rows {
            let fold = match r.fold {
                FoldTag::Fold(f) => f.to_string(),
                FoldTag::Split(t) => t.to_string(),
                FoldTag::Unassigned => String::new(),
            };
            let _ = w.write_record([r.clip_id.as_str(), &r.path.to_string_lossy(), &r.label, &fold]);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}
