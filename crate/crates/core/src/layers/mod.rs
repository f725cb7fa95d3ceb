//! Differentiable layers with hand-derived backward passes.
//!
//! Each layer exposes a forward that returns its output together with the
//! state its backward needs, and a backward that maps the upstream gradient
//! to the input gradient plus one gradient per parameter tensor.

mod attention;
mod batchnorm;
mod conv;
mod dense;
pub mod gradcheck;
mod graphconv;

pub use attention::{mean_pool, mean_pool_backward, AttentionCache, AttentionGrads, AttentionParams};
pub use batchnorm::{BatchNormCache, BatchNormGrads, BatchNormParams, DEFAULT_EPS as BN_DEFAULT_EPS, DEFAULT_MOMENTUM as BN_DEFAULT_MOMENTUM};
pub use conv::{Conv1dGrads, Conv1dParams, KERNEL_WIDTH};
pub use dense::{DenseGrads, DenseParams};
pub use graphconv::{GraphBias, GraphConvCache, GraphConvGrads, GraphConvParams};

use crate::numerics::Matrix;

/// A trainable tensor and its gradient slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Matrix,
    pub grad: Matrix,
}

impl Param {
    pub fn new(value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }
}
