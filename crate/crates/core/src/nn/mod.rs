//! Forward-only network kernels.
//!
//! Tensors are `channels x time x freq` (1D tensors have `freq == 1`).
//! Convolutions are cross-correlations lowered to single-precision GEMM.

mod activation;
mod conv;
mod filters;
mod norm;
mod pool;
mod tensor;

pub use activation::{elu, elu_inplace, relu, relu_inplace, residual_add};
pub use conv::{conv1d, conv2d, output_len};
pub use filters::{init_filters, FilterBank, FilterShape, Padding};
pub use norm::{apply_channel_stats, batch_norm_channels, batch_stat_normalize, channel_stats, BN_EPSILON};
pub use pool::{max_pool, max_pool1d, mean_pool, mean_pool1d};
pub use tensor::{global_average, Tensor};
