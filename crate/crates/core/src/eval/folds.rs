//! Fold plans: stratified k-fold, predefined folds and fixed splits.

use alloc::vec::Vec;
use core::fmt;

use crate::classify::Split;
use crate::error::{ensure, invalid, Result};
use crate::rng::SeededRng;

const FOLD_STREAM: u64 = 0x464f_4c44;
const HOLDOUT_STREAM: u64 = 0x484f_4c44;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Valid => "valid",
            SplitTag::Test => "test",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SplitTag {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "valid" | "validation" => Ok(SplitTag::Valid),
            "test" => Ok(SplitTag::Test),
            _ => invalid!("unknown split tag '{s}'"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assignment {
    Folds(Vec<usize>),
    Fixed(Vec<SplitTag>),
}

/// Assignment of every row (in dataset order) to a fold or split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub assignment: Assignment,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    /// Predefined fold indices, `0..k`.
    pub fn from_folds(folds: Vec<usize>) -> Result<Self> {
        ensure!(!folds.is_empty(), "empty fold assignment");
        let k = folds.iter().max().copied().unwrap_or(0) + 1;
        for f in 0..k {
            ensure!(folds.contains(&f), "fold {f} of 0..{k} has no rows");
        }
        ensure!(k >= 2, "need at least two folds");
        Ok(Self { assignment: Assignment::Folds(folds), k, seed: 0, stratified: false })
    }

    pub fn fixed(tags: Vec<SplitTag>) -> Result<Self> {
        for t in [SplitTag::Train, SplitTag::Test] {
            ensure!(tags.contains(&t), "fixed split has no {t} rows");
        }
        Ok(Self { assignment: Assignment::Fixed(tags), k: 1, seed: 0, stratified: false })
    }

    pub fn len(&self) -> usize {
        match &self.assignment {
            Assignment::Folds(f) => f.len(),
            Assignment::Fixed(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.assignment, Assignment::Fixed(_))
    }

    /// Number of evaluation rounds: `k` for fold plans, 1 for fixed splits.
    pub fn rounds(&self) -> usize {
        self.k
    }

    /// `(train, test)` rows for one round. For a fixed split, validation rows
    /// are returned separately by [`fixed_validation`](Self::fixed_validation).
    pub fn round(&self, r: usize) -> (Vec<usize>, Vec<usize>) {
        match &self.assignment {
            Assignment::Folds(f) => {
                let test = (0..f.len()).filter(|&i| f[i] == r).collect();
                let train = (0..f.len()).filter(|&i| f[i] != r).collect();
                (train, test)
            }
            Assignment::Fixed(t) => (self.tagged(t, SplitTag::Train), self.tagged(t, SplitTag::Test)),
        }
    }

    pub fn fixed_validation(&self) -> Option<Vec<usize>> {
        match &self.assignment {
            Assignment::Fixed(t) => Some(self.tagged(t, SplitTag::Valid)),
            Assignment::Folds(_) => None,
        }
    }

    fn tagged(&self, t: &[SplitTag], tag: SplitTag) -> Vec<usize> {
        (0..t.len()).filter(|&i| t[i] == tag).collect()
    }

    /// Sizes of (train, valid, test) for fixed splits.
    pub fn split_sizes(&self) -> Option<(usize, usize, usize)> {
        match &self.assignment {
            Assignment::Fixed(t) => {
                let c = |tag| t.iter().filter(|&&x| x == tag).count();
                Some((c(SplitTag::Train), c(SplitTag::Valid), c(SplitTag::Test)))
            }
            Assignment::Folds(_) => None,
        }
    }
}

fn class_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = alloc::vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

/// Seeded shuffle within each class, then round-robin fold assignment whose
/// position carries over from one class to the next, so fold sizes stay
/// balanced overall as well as per class.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    ensure!(k >= 2, "need at least two folds, got {k}");
    let members = class_members(labels);
    for (c, m) in members.iter().enumerate() {
        ensure!(m.is_empty() || m.len() >= k, "class {c} has {} members, fewer than {k} folds", m.len());
    }
    let mut rng = SeededRng::new(seed, FOLD_STREAM);
    let mut folds = alloc::vec![0; labels.len()];
    let mut next = 0;
    for mut m in members {
        rng.shuffle(&mut m);
        for i in m {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { assignment: Assignment::Folds(folds), k, seed, stratified: true })
}

/// Carves a stratified validation subset (about `fraction` of each class,
/// at least one row when the class has two or more) out of `rows`.
pub fn stratified_holdout(rows: &[usize], labels: &[usize], fraction: f64, seed: u64) -> Result<Split> {
    ensure!((0.0..1.0).contains(&fraction) && fraction > 0.0, "holdout fraction {fraction} outside (0, 1)");
    let sub: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let mut rng = SeededRng::new(seed, HOLDOUT_STREAM);
    let mut split = Split { train: Vec::new(), valid: Vec::new() };
    for mut m in class_members(&sub) {
        if m.is_empty() {
            continue;
        }
        rng.shuffle(&mut m);
        let take = if m.len() < 2 { 0 } else { (libm::round(m.len() as f64 * fraction) as usize).clamp(1, m.len() - 1) };
        split.valid.extend(m[..take].iter().map(|&j| rows[j]));
        split.train.extend(m[take..].iter().map(|&j| rows[j]));
    }
    split.train.sort_unstable();
    split.valid.sort_unstable();
    ensure!(!split.valid.is_empty(), "holdout left no validation rows");
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn per_class_fold_counts(labels: &[usize], plan: &FoldPlan) -> Vec<Vec<usize>> {
        let Assignment::Folds(f) = &plan.assignment else { panic!() };
        let classes = labels.iter().max().unwrap() + 1;
        let mut c = alloc::vec![alloc::vec![0; plan.k]; classes];
        for (i, &l) in labels.iter().enumerate() {
            c[l][f[i]] += 1;
        }
        c
    }

    #[test]
    fn ten_by_ten() {
        let labels: Vec<usize> = (0..100).map(|i| i / 10).collect();
        let plan = stratified_folds(&labels, 10, 3).unwrap();
        assert!(per_class_fold_counts(&labels, &plan).iter().flatten().all(|&n| n == 1));
        assert_eq!(plan, stratified_folds(&labels, 10, 3).unwrap());
        assert_ne!(plan, stratified_folds(&labels, 10, 4).unwrap());
    }

    #[test]
    fn thirteen_classes_4180_clips() {
        let sizes = [340, 320, 330, 310, 300, 350, 360, 290, 280, 370, 325, 315, 290];
        assert_eq!(sizes.iter().sum::<usize>(), 4180);
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat(c).take(n)).collect();
        let plan = stratified_folds(&labels, 10, 1).unwrap();
        for row in per_class_fold_counts(&labels, &plan) {
            assert!(row.iter().max().unwrap() - row.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn small_class_rejected() {
        assert!(stratified_folds(&[0, 0, 0, 1, 1], 3, 0).is_err());
    }

    #[test]
    fn fixed_split_rounds() {
        use SplitTag::*;
        let p = FoldPlan::fixed(alloc::vec![Train, Valid, Test, Train, Test]).unwrap();
        assert_eq!(p.round(0), (alloc::vec![0, 3], alloc::vec![2, 4]));
        assert_eq!(p.fixed_validation(), Some(alloc::vec![1]));
        assert_eq!(p.split_sizes(), Some((2, 1, 2)));
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(counts in proptest::collection::vec(3usize..20, 2..6), k in 2usize..4, seed: u64) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat(c).take(n)).collect();
            let plan = stratified_folds(&labels, k, seed).unwrap();
            for row in per_class_fold_counts(&labels, &plan) {
                prop_assert!(row.iter().max().unwrap() - row.iter().min().unwrap() <= 1);
            }
            for r in 0..k {
                let (train, test) = plan.round(r);
                prop_assert_eq!(train.len() + test.len(), labels.len());
                prop_assert!(test.iter().all(|t| !train.contains(t)));
            }
        }

        #[test]
        fn holdout_is_stratified_partition(counts in proptest::collection::vec(2usize..30, 2..5), seed: u64) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat(c).take(n)).collect();
            let rows: Vec<usize> = (0..labels.len()).collect();
            let s = stratified_holdout(&rows, &labels, 0.2, seed).unwrap();
            prop_assert_eq!(s.train.len() + s.valid.len(), rows.len());
            prop_assert!(s.valid.iter().all(|v| !s.train.contains(v)));
            for c in 0..counts.len() {
                prop_assert!(s.train.iter().any(|&i| labels[i] == c));
                prop_assert!(s.valid.iter().any(|&i| labels[i] == c));
            }
        }
    }
}
