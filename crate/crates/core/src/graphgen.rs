//! HRRP-to-graph transformation.
//!
//! Every range cell becomes a node whose single feature is its amplitude.
//! The graph is fully connected (self-loops included) with edge weights
//!
//! ```text
//! e[i][j] = h[i] * h[j] / (|i - j| + 1)
//! ```
//!
//! which is the outer product `hᵀh` scaled elementwise by a fixed
//! distance-decay matrix `K[i][j] = 1 / (|i - j| + 1)`. Equivalently
//! `E = diag(h) · K · diag(h)`; [`FactoredAdjacency`] uses that form with an
//! FFT-backed Toeplitz product so neighbour aggregation over a 501-cell
//! profile never touches the dense N×N matrix.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, Matrix};

/// One range profile: `amplitudes[n]` is the magnitude of range cell `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HrrpSample {
    pub amplitudes: Vec<f64>,
    pub label: usize,
}

impl HrrpSample {
    pub fn new(amplitudes: Vec<f64>, label: usize) -> Self {
        Self { amplitudes, label }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HrrpGraph {
    /// channels × N; a freshly built graph has one channel, the amplitude row.
    pub node_features: Matrix,
    /// N × N edge weights.
    pub adjacency: Matrix,
}

/// Distance-decay factor `1 / (|i - j| + 1)` in index units.
#[inline]
pub fn distance_decay(i: usize, j: usize) -> f64 {
    1.0 / (i.abs_diff(j) as f64 + 1.0)
}

pub fn build_adjacency(amplitudes: &[f64]) -> Result<Matrix> {
    if amplitudes.is_empty() {
        return Err(Error::Usage("cannot build an adjacency for an empty profile".into()));
    }
    if let Some(bad) = amplitudes.iter().find(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite amplitude {bad}")));
    }
    let h = Matrix::row_vector(amplitudes)?;
    // Rank-one outer product hᵀh, then the elementwise distance scaling.
    let mut e = matmul(&h.transpose(), &h)?;
    let n = amplitudes.len();
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] /= i.abs_diff(j) as f64 + 1.0;
        }
    }
    Ok(e)
}

pub fn build_graph(sample: &HrrpSample) -> Result<HrrpGraph> {
    Ok(HrrpGraph {
        node_features: Matrix::row_vector(&sample.amplitudes)?,
        adjacency: build_adjacency(&sample.amplitudes)?,
    })
}

/// Adjacency-weighted neighbour aggregation as used by the graph convolution.
///
/// For node features `x` (channels × N) the aggregate has column
/// `i = Σ_j e[j][i] · x[:, j]`, i.e. `x · E`.
pub trait NeighborAggregation: Sync {
    fn nodes(&self) -> usize;

    /// `x · E`
    fn aggregate(&self, x: &Matrix) -> Result<Matrix>;

    /// `g · Eᵀ`, the adjoint needed by backward passes.
    fn aggregate_adjoint(&self, g: &Matrix) -> Result<Matrix>;
}

impl NeighborAggregation for Matrix {
    fn nodes(&self) -> usize {
        self.rows()
    }

    fn aggregate(&self, x: &Matrix) -> Result<Matrix> {
        if self.rows() != self.cols() {
            return Err(Error::shape("aggregate", self.shape(), x.shape()));
        }
        matmul(x, self)
    }

    fn aggregate_adjoint(&self, g: &Matrix) -> Result<Matrix> {
        if self.rows() != self.cols() {
            return Err(Error::shape("aggregate_adjoint", self.shape(), g.shape()));
        }
        matmul_nt(g, self)
    }
}

/// Precomputed spectrum of the distance-decay Toeplitz matrix for a fixed
/// node count. Shared read-only across samples.
pub struct DistanceKernel {
    n: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for DistanceKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistanceKernel")
            .field("n", &self.n)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl DistanceKernel {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "kernel needs at least one node");
        // Linear (not circular) convolution needs at least 2n - 1 points.
        let fft_len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let mut spectrum = vec![Complex::new(0.0, 0.0); fft_len];
        for d in 0..n {
            let w = 1.0 / (d as f64 + 1.0);
            spectrum[d].re = w;
            if d > 0 {
                spectrum[fft_len - d].re = w;
            }
        }
        forward.process(&mut spectrum);
        // Fold the inverse transform's 1/L normalization into the spectrum.
        let inv_len = 1.0 / fft_len as f64;
        spectrum.iter_mut().for_each(|c| *c *= inv_len);

        Self {
            n,
            fft_len,
            forward,
            inverse,
            spectrum,
        }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    /// Applies `K` to every row of `x` (each row is a length-N signal).
    /// Two real rows share one complex transform since `K` is real.
    pub fn apply_rows(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n {
            return Err(Error::shape("DistanceKernel::apply_rows", x.shape(), (self.n, self.n)));
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let mut r = 0;
        while r < x.rows() {
            let paired = r + 1 < x.rows();
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (slot, &v) in buf.iter_mut().zip(x.row(r)) {
                slot.re = v;
            }
            if paired {
                for (slot, &v) in buf.iter_mut().zip(x.row(r + 1)) {
                    slot.im = v;
                }
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (b, s) in buf.iter_mut().zip(&self.spectrum) {
                *b *= s;
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            for (o, b) in out.row_mut(r).iter_mut().zip(&buf) {
                *o = b.re;
            }
            if paired {
                for (o, b) in out.row_mut(r + 1).iter_mut().zip(&buf) {
                    *o = b.im;
                }
            }
            r += 2;
        }
        Ok(out)
    }
}

/// The adjacency of one profile kept in factored form `diag(h) · K · diag(h)`.
#[derive(Clone, Debug)]
pub struct FactoredAdjacency {
    amplitudes: Vec<f64>,
    kernel: Arc<DistanceKernel>,
}

impl FactoredAdjacency {
    pub fn new(amplitudes: Vec<f64>, kernel: Arc<DistanceKernel>) -> Result<Self> {
        if amplitudes.len() != kernel.nodes() {
            return Err(Error::shape(
                "FactoredAdjacency::new",
                (1, amplitudes.len()),
                (kernel.nodes(), kernel.nodes()),
            ));
        }
        Ok(Self { amplitudes, kernel })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Materializes the dense matrix; equal to [`build_adjacency`] up to rounding.
    pub fn to_dense(&self) -> Result<Matrix> {
        build_adjacency(&self.amplitudes)
    }
}

impl NeighborAggregation for FactoredAdjacency {
    fn nodes(&self) -> usize {
        self.amplitudes.len()
    }

    fn aggregate(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.amplitudes.len() {
            return Err(Error::shape("aggregate", x.shape(), (self.nodes(), self.nodes())));
        }
        let h = &self.amplitudes;
        let weighted = Matrix::from_fn(x.rows(), x.cols(), |c, j| x[(c, j)] * h[j]);
        let mut out = self.kernel.apply_rows(&weighted)?;
        for c in 0..out.rows() {
            for (o, hi) in out.row_mut(c).iter_mut().zip(h) {
                *o *= hi;
            }
        }
        Ok(out)
    }

    fn aggregate_adjoint(&self, g: &Matrix) -> Result<Matrix> {
        // E is symmetric.
        self.aggregate(g)
    }
}
