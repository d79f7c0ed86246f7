//! Layer kernels with analytic backward passes.

pub mod conv;
pub mod elementwise;
pub mod lrn;
pub mod pool;

pub use conv::{
    conv2d, conv2d_backward, conv_output_dim, deconv2d, deconv2d_backward, deconv_output_dim,
    ConvGrads, ConvParams,
};
pub use elementwise::{
    channel_concat, channel_split, elementwise_max, elementwise_max_backward, relu,
    relu_backward, MaxSelector,
};
pub use lrn::{lrn, lrn_backward, LrnConfig};
pub use pool::{maxpool, maxpool_backward, pool_output_dim, PoolConfig, PoolIndices};
