//! Hyperparameter grids and validation-based selection.

use alloc::vec::Vec;
use core::fmt;

use super::{ElmModel, Kernel, KernelMatrix, Matrix, Standardizer, SvmModel};
use crate::error::{ensure, invalid, Result};
use crate::eval::accuracy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Svm,
    Elm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Svm => "svm",
            Family::Elm => "elm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Family {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(Family::Svm),
            "elm" => Ok(Family::Elm),
            _ => invalid!("unknown classifier family '{s}' (expected svm or elm)"),
        }
    }
}

/// An RBF width, either fixed or `1 / number of features`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma {
    Fixed(f64),
    InverseFeatures,
}

impl Gamma {
    pub fn resolve(self, features: usize) -> f64 {
        match self {
            Gamma::Fixed(g) => g,
            Gamma::InverseFeatures => 1.0 / features.max(1) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HyperParams {
    Svm { kernel: Kernel, c: f64 },
    Elm { hidden: usize },
}

impl HyperParams {
    pub fn family(&self) -> Family {
        match self {
            HyperParams::Svm { .. } => Family::Svm,
            HyperParams::Elm { .. } => Family::Elm,
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::Svm { kernel: Kernel::Linear, c } => write!(f, "svm kernel=linear C={c}"),
            HyperParams::Svm { kernel: Kernel::Rbf { gamma }, c } => write!(f, "svm kernel=rbf gamma={gamma} C={c}"),
            HyperParams::Elm { hidden } => write!(f, "elm hidden={hidden}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperGrid {
    /// Include the linear kernel ahead of the RBF points.
    pub svm_linear: bool,
    pub svm_gammas: Vec<Gamma>,
    pub svm_cs: Vec<f64>,
    pub elm_hidden: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        let mut svm_gammas: Vec<Gamma> =
            [3, 5, 7, 9, 11, 13].iter().map(|&e| Gamma::Fixed(libm::pow(2.0, -(e as f64)))).collect();
        svm_gammas.push(Gamma::InverseFeatures);
        Self {
            svm_linear: true,
            svm_gammas,
            svm_cs: alloc::vec![0.1, 2.0, 8.0, 32.0],
            elm_hidden: alloc::vec![100, 250, 500, 1200, 1800, 2500],
        }
    }
}

impl HyperGrid {
    /// A grid holding exactly one configuration.
    pub fn single(p: HyperParams) -> Self {
        match p {
            HyperParams::Svm { kernel: Kernel::Linear, c } => {
                Self { svm_linear: true, svm_gammas: Vec::new(), svm_cs: alloc::vec![c], elm_hidden: Vec::new() }
            }
            HyperParams::Svm { kernel: Kernel::Rbf { gamma }, c } => Self {
                svm_linear: false,
                svm_gammas: alloc::vec![Gamma::Fixed(gamma)],
                svm_cs: alloc::vec![c],
                elm_hidden: Vec::new(),
            },
            HyperParams::Elm { hidden } => {
                Self { svm_linear: false, svm_gammas: Vec::new(), svm_cs: Vec::new(), elm_hidden: alloc::vec![hidden] }
            }
        }
    }

    /// Grid points in declaration order. For SVMs: every C with the linear
    /// kernel (when enabled), then every (γ, C) with the RBF kernel.
    pub fn points(&self, family: Family, features: usize) -> Vec<HyperParams> {
        match family {
            Family::Elm => self.elm_hidden.iter().map(|&hidden| HyperParams::Elm { hidden }).collect(),
            Family::Svm => {
                let mut v = Vec::new();
                if self.svm_linear {
                    v.extend(self.svm_cs.iter().map(|&c| HyperParams::Svm { kernel: Kernel::Linear, c }));
                }
                for g in &self.svm_gammas {
                    let kernel = Kernel::Rbf { gamma: g.resolve(features) };
                    v.extend(self.svm_cs.iter().map(|&c| HyperParams::Svm { kernel, c }));
                }
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Elm(ElmModel),
}

/// A standardizer plus the model trained on its output.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub standardizer: Standardizer,
    pub model: Model,
}

impl Classifier {
    /// Fits the standardizer on `x` and trains on the standardized rows.
    pub fn fit(params: HyperParams, x: &Matrix, labels: &[usize], classes: usize, seed: u64) -> Result<Self> {
        let standardizer = Standardizer::fit(x)?;
        let z = standardizer.apply(x)?;
        let model = match params {
            HyperParams::Svm { kernel, c } => Model::Svm(SvmModel::train(&z, labels, classes, kernel, c)?),
            HyperParams::Elm { hidden } => Model::Elm(ElmModel::fit_labels(&z, labels, classes, hidden, seed)?),
        };
        Ok(Self { standardizer, model })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let z = self.standardizer.apply(x)?;
        match &self.model {
            Model::Svm(m) => m.predict(&z),
            Model::Elm(m) => m.predict(&z),
        }
    }

    pub fn classes(&self) -> usize {
        match &self.model {
            Model::Svm(m) => m.classes(),
            Model::Elm(m) => m.classes(),
        }
    }
}

/// Train/validation row indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best: HyperParams,
    /// Mean validation accuracy of every point, in grid order.
    pub scores: Vec<(HyperParams, f64)>,
}

/// Scores every grid point by mean validation accuracy over `splits` and
/// returns the best one; ties go to the earliest point.
pub fn grid_search(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    splits: &[Split],
    family: Family,
    grid: &HyperGrid,
    seed: u64,
) -> Result<GridResult> {
    ensure!(labels.len() == x.rows(), "{} labels for {} rows", labels.len(), x.rows());
    ensure!(!splits.is_empty(), "grid search needs at least one split");
    let points = grid.points(family, x.cols());
    ensure!(!points.is_empty(), "empty {family} grid");
    let mut totals = alloc::vec![0.0; points.len()];
    for split in splits {
        let acc = score_split(x, labels, classes, split, &points, seed)?;
        totals.iter_mut().zip(acc).for_each(|(t, a)| *t += a);
    }
    let scores: Vec<(HyperParams, f64)> =
        points.into_iter().zip(totals).map(|(p, t)| (p, t / splits.len() as f64)).collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    Ok(GridResult { best: scores[best].0, scores })
}

fn score_split(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    split: &Split,
    points: &[HyperParams],
    seed: u64,
) -> Result<Vec<f64>> {
    ensure!(!split.train.is_empty() && !split.valid.is_empty(), "split with an empty side");
    let train_y: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let valid_y: Vec<usize> = split.valid.iter().map(|&i| labels[i]).collect();
    let st = Standardizer::fit(&x.select_rows(&split.train))?;
    let zt = st.apply(&x.select_rows(&split.train))?;
    let zv = st.apply(&x.select_rows(&split.valid))?;
    let linear = points.iter().any(|p| matches!(p, HyperParams::Svm { .. })).then(|| KernelMatrix::linear(&zt));
    let mut cached: Option<(Kernel, KernelMatrix)> = None;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let pred = match *p {
            HyperParams::Elm { hidden } => ElmModel::fit_labels(&zt, &train_y, classes, hidden, seed)?.predict(&zv)?,
            HyperParams::Svm { kernel, c } => {
                if cached.as_ref().map(|(k, _)| *k) != Some(kernel) {
                    let base = linear.as_ref().expect("built for svm points");
                    cached = Some((kernel, base.with_kernel(kernel)));
                }
                let k = &cached.as_ref().expect("set above").1;
                SvmModel::train_with_kernel(&zt, k, &train_y, classes, c)?.predict(&zv)?
            }
        };
        out.push(accuracy(&pred, &valid_y)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_cardinalities_and_order() {
        let g = HyperGrid::default();
        let svm = g.points(Family::Svm, 64);
        assert_eq!(svm.len(), 32);
        assert_eq!(svm[0], HyperParams::Svm { kernel: Kernel::Linear, c: 0.1 });
        assert_eq!(svm[4], HyperParams::Svm { kernel: Kernel::Rbf { gamma: 0.125 }, c: 0.1 });
        assert_eq!(svm[31], HyperParams::Svm { kernel: Kernel::Rbf { gamma: 1.0 / 64.0 }, c: 32.0 });
        let elm = g.points(Family::Elm, 64);
        assert_eq!(elm.len(), 6);
        assert_eq!(elm[5], HyperParams::Elm { hidden: 2500 });
    }

    #[test]
    fn single_point_grid_returns_it() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [1.0], [1.1], [0.05], [1.05]]).unwrap();
        let l = [0, 0, 1, 1, 0, 1];
        let split = Split { train: alloc::vec![0, 1, 2, 3], valid: alloc::vec![4, 5] };
        for p in [
            HyperParams::Svm { kernel: Kernel::Linear, c: 2.0 },
            HyperParams::Svm { kernel: Kernel::Rbf { gamma: 0.5 }, c: 8.0 },
            HyperParams::Elm { hidden: 10 },
        ] {
            let g = HyperGrid::single(p);
            let r = grid_search(&x, &l, 2, &[split.clone()], p.family(), &g, 1).unwrap();
            assert_eq!(r.best, p);
            assert_eq!(r.scores.len(), 1);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let g = HyperGrid { svm_linear: false, svm_gammas: Vec::new(), svm_cs: Vec::new(), elm_hidden: Vec::new() };
        let s = Split { train: alloc::vec![0, 1], valid: alloc::vec![0] };
        assert!(grid_search(&x, &[0, 1], 2, &[s], Family::Elm, &g, 0).is_err());
    }
}
