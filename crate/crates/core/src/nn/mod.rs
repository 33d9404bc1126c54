//! Deterministic tensor and training engine: rank-4 tensors, convolution
//! and friends with exact backward passes, Adam, and central-difference
//! gradient verification.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod ops;
pub mod tensor;

pub use adam::Adam;
pub use gradcheck::{check_layer, GradReport};
pub use layers::{Conv2d, Downsample2x, Layer, Relu, ResidualBlock, Sequential, Upsample2x};
pub use ops::{
    concat_channels, conv2d_bwd, conv2d_fwd, mse_loss, relu_bwd, relu_fwd, split_channels,
    upsample_nearest2x_bwd, upsample_nearest2x_fwd,
};
pub use tensor::{fs, Scalar, Tensor};
