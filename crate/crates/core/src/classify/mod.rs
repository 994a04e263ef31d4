//! Back-end classifiers over feature vectors.

pub mod elm;
pub mod grid;
pub mod linalg;
pub mod standardize;
pub mod svm;

pub use elm::{argmax, one_hot, ElmModel};
pub use grid::{grid_search, Classifier, Family, Gamma, GridResult, HyperGrid, HyperParams, Model, Split};
pub use linalg::{pseudoinverse, svd, Matrix, Svd, PINV_RCOND};
pub use standardize::Standardizer;
pub use svm::{BinarySolution, Kernel, KernelMatrix, SvmModel, SMO_TOLERANCE};
