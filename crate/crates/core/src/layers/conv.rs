//! 1-D convolution over range cells, kernel width 3, stride 1, zero
//! same-padding so the node count is preserved for the graph layer.

use super::Param;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Matrix};

pub const KERNEL_WIDTH: usize = 3;

/// Kernel bank stored as `out × (in · 3)`; tap `k` of input channel `c` for
/// output channel `o` lives at `(o, c * 3 + k)` and reads `x[c][n + k - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1dParams {
    pub kernels: Param,
    pub bias: Param,
}

#[derive(Clone, Debug)]
pub struct Conv1dGrads {
    pub input: Matrix,
    pub kernels: Matrix,
    pub bias: Matrix,
}

impl Conv1dParams {
    pub fn new(kernels: Matrix, bias: Matrix) -> Result<Self> {
        if !kernels.cols().is_multiple_of(KERNEL_WIDTH) {
            return Err(Error::Config(format!(
                "conv kernel bank has {} columns, not a multiple of {KERNEL_WIDTH}",
                kernels.cols()
            )));
        }
        if bias.shape() != (kernels.rows(), 1) {
            return Err(Error::shape("Conv1dParams::new", kernels.shape(), bias.shape()));
        }
        Ok(Self {
            kernels: Param::new(kernels),
            bias: Param::new(bias),
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            kernels: Param::new(Matrix::zeros(out_channels, in_channels * KERNEL_WIDTH)),
            bias: Param::new(Matrix::zeros(out_channels, 1)),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.value.cols() / KERNEL_WIDTH
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.value.rows()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.rows() != self.in_channels() {
            return Err(Error::shape("conv1d", x.shape(), self.kernels.shape()));
        }
        if x.cols() < KERNEL_WIDTH {
            return Err(Error::Usage(format!(
                "conv1d needs at least {KERNEL_WIDTH} range cells, got {}",
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let n = x.cols();
        let k = &self.kernels.value;
        let mut y = Matrix::zeros(self.out_channels(), n);
        for o in 0..self.out_channels() {
            let row = y.row_mut(o);
            row.fill(self.bias.value[(o, 0)]);
            for c in 0..self.in_channels() {
                let xc = x.row(c);
                let base = c * KERNEL_WIDTH;
                axpy(k[(o, base)], &xc[..n - 1], &mut row[1..]);
                axpy(k[(o, base + 1)], xc, row);
                axpy(k[(o, base + 2)], &xc[1..], &mut row[..n - 1]);
            }
        }
        Ok(y)
    }

    /// `x` is the input seen by the matching forward call.
    pub fn backward(&self, x: &Matrix, upstream: &Matrix) -> Result<Conv1dGrads> {
        self.check_input(x)?;
        if upstream.shape() != (self.out_channels(), x.cols()) {
            return Err(Error::shape("conv1d_backward", upstream.shape(), (self.out_channels(), x.cols())));
        }
        let n = x.cols();
        let k = &self.kernels.value;
        let mut dx = Matrix::zeros(x.rows(), n);
        let mut dk = Matrix::zeros(k.rows(), k.cols());
        let mut db = Matrix::zeros(self.out_channels(), 1);
        for o in 0..self.out_channels() {
            let g = upstream.row(o);
            db[(o, 0)] = g.iter().sum();
            for c in 0..self.in_channels() {
                let xc = x.row(c);
                let base = c * KERNEL_WIDTH;
                dk[(o, base)] = dot(&g[1..], &xc[..n - 1]);
                dk[(o, base + 1)] = dot(g, xc);
                dk[(o, base + 2)] = dot(&g[..n - 1], &xc[1..]);

                let dxc = dx.row_mut(c);
                axpy(k[(o, base)], &g[1..], &mut dxc[..n - 1]);
                axpy(k[(o, base + 1)], g, dxc);
                axpy(k[(o, base + 2)], &g[..n - 1], &mut dxc[1..]);
            }
        }
        Ok(Conv1dGrads {
            input: dx,
            kernels: dk,
            bias: db,
        })
    }
}
