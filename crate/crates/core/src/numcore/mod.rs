//! Minimal dense numeric kernel: the matrix type, trainable parameters,
//! per-op forward/backward passes, and the Adam update.

mod matrix;
mod ops;
mod param;

pub use matrix::Matrix;
pub use ops::{
    adam_step, affine_backward, affine_forward, cross_entropy, cross_entropy_backward,
    relu_backward, relu_forward, sigmoid, softmax_column, softmax_column_backward, softmax_rows,
    softmax_rows_backward, LOG_EPS,
};
pub use param::Param;
