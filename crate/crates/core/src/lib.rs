//! Forward-only audio classification with randomly weighted convolutional
//! front-ends.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers:
//!
//! * [`dsp`]: resampling, log-mel spectrograms, energy envelopes and the
//!   MFCC baseline vector.
//! * [`nn`]: seeded filter initialization and the convolution, pooling and
//!   activation kernels.
//! * [`frontends`]: the eleven random-CNN architectures plus the MFCC
//!   baseline, each producing a fixed-size feature vector per clip.
//! * [`classify`]: pseudoinverse, extreme learning machine, SMO-trained
//!   kernel SVM, standardization and hyperparameter grids.
//! * [`eval`]: fold plans, cross-validation, Welch t-test / ANOVA, the
//!   batch-statistics leakage experiment and synthetic datasets.
//!
//! Enable the `std` feature to let the GEMM kernels detect AVX/FMA at run
//! time. Kernel selection can change the last bits of convolution outputs,
//! so caches are only bit-comparable between builds with the same features
//! on the same CPU family.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod classify;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod frontends;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
