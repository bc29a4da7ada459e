//! Forward and backward passes for every primitive layer, plus loss,
//! parameter update, and finite-difference gradient checking.
//!
//! All functions are pure with respect to everything except their outputs,
//! use fixed summation orders, and work in f64 throughout.

mod conv;
mod dense;
mod gradcheck;
mod norm;
mod pool;
mod sgd;
mod softmax;

pub use conv::{conv2d, conv2d_backward, Conv2dCfg, ConvGrads};
pub use dense::{dense, dense_backward, relu, relu_backward, DenseGrads};
pub use gradcheck::{grad_check, CheckTarget};
pub use norm::{
    batchnorm_backward, batchnorm_infer, batchnorm_train, lrn, lrn_backward, BnCache, BnGrads,
    BnState, LrnParams, BN_EPS, BN_MOMENTUM,
};
pub use pool::{pool2d, pool2d_backward, Pool2dCfg, PoolMode};
pub use sgd::{sgd_step, SgdCfg};
pub use softmax::{cross_entropy, cross_entropy_logits_grad, softmax, softmax_backward};

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OpError {
    ShapeMismatch(String),
    BadOutputShape(String),
    DegenerateBatch(String),
    LabelOutOfRange { label: u32, classes: usize },
    EmptyInput(String),
}

impl fmt::Display for OpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpError::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            OpError::BadOutputShape(m) => write!(f, "bad output shape: {m}"),
            OpError::DegenerateBatch(m) => write!(f, "degenerate batch: {m}"),
            OpError::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            OpError::EmptyInput(m) => write!(f, "empty input: {m}"),
        }
    }
}

impl std::error::Error for OpError {}

/// Spatial output side for a window op: floor((in + 2p - k) / s) + 1.
/// Errors when the window does not fit the padded input.
pub fn out_side(input: usize, window: usize, stride: usize, pad: usize) -> Result<usize, OpError> {
    let padded = input + 2 * pad;
    if padded < window {
        return Err(OpError::BadOutputShape(format!(
            "window {window} larger than padded input {padded}"
        )));
    }
    Ok((padded - window) / stride + 1)
}
