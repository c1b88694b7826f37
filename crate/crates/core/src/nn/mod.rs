//! Minimal convolutional network engine: 4-D tensors, 5×5 "same"
//! convolutions, ReLU, channel concatenation, l2 loss, SGD and gradient
//! checking.

pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod ops;
pub mod optim;
mod scalar;
pub mod stack;
mod tensor;

pub use conv::{conv_backward, conv_forward, sgd_step, ConvParams, GradBundle};
pub use gradcheck::{grad_check, grad_check_stack, Differentiable, GradCheckOptions, GradCheckReport};
pub use ops::{concat_channels, mse_loss, relu_backward, relu_forward, split_channels};
pub use optim::Sgd;
pub use scalar::Scalar;
pub use stack::{ConvStack, StackCache};
pub use tensor::Tensor4;
