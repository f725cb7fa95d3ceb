use super::Param;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Fully connected head: `W_fc · v + b_fc`, with `W_fc` shaped C × F.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    pub weight: Param,
    /// C × 1
    pub bias: Param,
}

#[derive(Clone, Debug)]
pub struct DenseGrads {
    pub input: Vec<f64>,
    pub weight: Matrix,
    pub bias: Matrix,
}

impl DenseParams {
    pub fn new(weight: Matrix, bias: &[f64]) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape("DenseParams::new", weight.shape(), (bias.len(), 1)));
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(Matrix::column_vector(bias)?),
        })
    }

    pub fn zeros(features: usize, outputs: usize) -> Self {
        Self {
            weight: Param::new(Matrix::zeros(outputs, features)),
            bias: Param::new(Matrix::zeros(outputs, 1)),
        }
    }

    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weight.value.mul_vec(v)?;
        for (o, b) in out.iter_mut().zip(self.bias.value.as_slice()) {
            *o += b;
        }
        Ok(out)
    }

    pub fn backward(&self, v: &[f64], upstream: &[f64]) -> Result<DenseGrads> {
        let w = &self.weight.value;
        if v.len() != w.cols() || upstream.len() != w.rows() {
            return Err(Error::shape("dense_backward", w.shape(), (upstream.len(), v.len())));
        }
        Ok(DenseGrads {
            input: w.transpose_mul_vec(upstream)?,
            weight: Matrix::from_fn(w.rows(), w.cols(), |c, f| upstream[c] * v[f]),
            bias: Matrix::column_vector(upstream)?,
        })
    }
}
