//! Central finite-difference oracle for the hand-written backward passes.
//!
//! Each layer probe draws a small random instance, defines the scalar
//! `L = Σ r ⊙ output` for a random probe tensor `r`, feeds `r` to the
//! layer's backward as the upstream gradient, and compares every returned
//! gradient tensor with central differences of `L`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttentionParams, BatchNormParams, Conv1dParams, DenseParams, GraphBias, GraphConvParams};
use crate::error::{Error, Result};
use crate::graphgen::build_adjacency;
use crate::numerics::{dot, leaky_relu, leaky_relu_backward, Matrix};

pub const FD_STEP: f64 = 1e-4;
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Max over coordinates of `|analytic − numeric| / max(1, |analytic|, |numeric|)`
/// where `numeric` is the central difference with step [`FD_STEP`].
pub fn finite_diff_check<F>(mut f: F, theta: &[f64], analytic: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if theta.len() != analytic.len() {
        return Err(Error::Usage(format!(
            "finite_diff_check: {} parameters but {} gradient entries",
            theta.len(),
            analytic.len()
        )));
    }
    let mut point = theta.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        point[i] = theta[i] + FD_STEP;
        let plus = f(&point);
        point[i] = theta[i] - FD_STEP;
        let minus = f(&point);
        point[i] = theta[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("objective is not finite near coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[i];
        let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub layer: String,
    pub tensor: String,
    pub max_rel_error: f64,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= GRAD_TOLERANCE
    }
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:<14} {:>12.3e}  {}",
            self.layer,
            self.tensor,
            self.max_rel_error,
            if self.passed() { "ok" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv1d,
    BatchNormTrain,
    BatchNormEval,
    LeakyRelu,
    GraphConv,
    Attention,
    MeanPool,
    Dense,
}

impl LayerKind {
    pub const ALL: [LayerKind; 8] = [
        LayerKind::Conv1d,
        LayerKind::BatchNormTrain,
        LayerKind::BatchNormEval,
        LayerKind::LeakyRelu,
        LayerKind::GraphConv,
        LayerKind::Attention,
        LayerKind::MeanPool,
        LayerKind::Dense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv1d => "conv1d",
            LayerKind::BatchNormTrain => "batchnorm-train",
            LayerKind::BatchNormEval => "batchnorm-eval",
            LayerKind::LeakyRelu => "leaky-relu",
            LayerKind::GraphConv => "graphconv",
            LayerKind::Attention => "attention",
            LayerKind::MeanPool => "mean-pool",
            LayerKind::Dense => "dense",
        }
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = LayerKind::ALL.iter().map(|k| k.name()).collect();
                Error::Usage(format!("unknown layer '{s}', expected one of {}", names.join(", ")))
            })
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn reshaped(like: &Matrix, values: &[f64]) -> Matrix {
    Matrix::new(like.rows(), like.cols(), values.to_vec()).expect("same length as template")
}

struct Probe<'a> {
    layer: &'a str,
    reports: Vec<GradReport>,
}

impl Probe<'_> {
    fn check(&mut self, tensor: &str, theta: &[f64], analytic: &[f64], f: impl FnMut(&[f64]) -> f64) -> Result<()> {
        let max_rel_error = finite_diff_check(f, theta, analytic)?;
        self.reports.push(GradReport {
            layer: self.layer.to_string(),
            tensor: tensor.to_string(),
            max_rel_error,
        });
        Ok(())
    }
}

/// Runs the finite-difference probe for one layer on a random small instance
/// (N ≤ 8 nodes, ≤ 4 channels) drawn from `seed`.
pub fn check_layer(kind: LayerKind, seed: u64) -> Result<Vec<GradReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=8);
    let c_in = rng.random_range(1..=4);
    let c_out = rng.random_range(1..=4);
    let mut probe = Probe {
        layer: kind.name(),
        reports: Vec::new(),
    };

    match kind {
        LayerKind::Conv1d => {
            let conv = Conv1dParams::new(random_matrix(&mut rng, c_out, c_in * 3), random_matrix(&mut rng, c_out, 1))?;
            let x = random_matrix(&mut rng, c_in, n);
            let r = random_matrix(&mut rng, c_out, n);
            let g = conv.backward(&x, &r)?;
            let loss = |conv: &Conv1dParams, x: &Matrix| dot(conv.forward(x).unwrap().as_slice(), r.as_slice());

            probe.check("input", x.as_slice(), g.input.as_slice(), |t| loss(&conv, &reshaped(&x, t)))?;
            probe.check("kernels", conv.kernels.value.as_slice(), g.kernels.as_slice(), |t| {
                let mut p = conv.clone();
                p.kernels.value = reshaped(&conv.kernels.value, t);
                loss(&p, &x)
            })?;
            probe.check("bias", conv.bias.value.as_slice(), g.bias.as_slice(), |t| {
                let mut p = conv.clone();
                p.bias.value = reshaped(&conv.bias.value, t);
                loss(&p, &x)
            })?;
        }
        LayerKind::BatchNormTrain | LayerKind::BatchNormEval => {
            let training = kind == LayerKind::BatchNormTrain;
            let batch = rng.random_range(2..=4);
            let mut bn = BatchNormParams::new(c_in, 1e-5, 0.1)?;
            bn.gamma.value = Matrix::from_fn(c_in, 1, |_, _| rng.random_range(0.5..1.5));
            bn.beta.value = random_matrix(&mut rng, c_in, 1);
            bn.running_mean = (0..c_in).map(|_| rng.random_range(-0.5..0.5)).collect();
            bn.running_var = (0..c_in).map(|_| rng.random_range(0.5..2.0)).collect();
            let xs: Vec<Matrix> = (0..batch).map(|_| random_matrix(&mut rng, c_in, n)).collect();
            let rs: Vec<Matrix> = (0..batch).map(|_| random_matrix(&mut rng, c_in, n)).collect();
            let (_, cache) = bn.forward(&xs, training)?;
            let g = bn.backward(&cache, &rs)?;
            let loss = |bn: &BatchNormParams, xs: &[Matrix]| -> f64 {
                let (ys, _) = bn.forward(xs, training).unwrap();
                ys.iter().zip(&rs).map(|(y, r)| dot(y.as_slice(), r.as_slice())).sum()
            };

            let flat_x: Vec<f64> = xs.iter().flat_map(|x| x.as_slice().to_vec()).collect();
            let flat_g: Vec<f64> = g.inputs.iter().flat_map(|x| x.as_slice().to_vec()).collect();
            let chunk = c_in * n;
            probe.check("input", &flat_x, &flat_g, |t| {
                let xs: Vec<Matrix> = t.chunks(chunk).map(|c| reshaped(&xs[0], c)).collect();
                loss(&bn, &xs)
            })?;
            probe.check("gamma", bn.gamma.value.as_slice(), g.gamma.as_slice(), |t| {
                let mut p = bn.clone();
                p.gamma.value = reshaped(&bn.gamma.value, t);
                loss(&p, &xs)
            })?;
            probe.check("beta", bn.beta.value.as_slice(), g.beta.as_slice(), |t| {
                let mut p = bn.clone();
                p.beta.value = reshaped(&bn.beta.value, t);
                loss(&p, &xs)
            })?;
        }
        LayerKind::LeakyRelu => {
            let slope = 0.01;
            let x = random_matrix(&mut rng, c_in, n);
            let r = random_matrix(&mut rng, c_in, n);
            let g = leaky_relu_backward(&x, &r, slope)?;
            probe.check("input", x.as_slice(), g.as_slice(), |t| {
                dot(leaky_relu(&reshaped(&x, t), slope).as_slice(), r.as_slice())
            })?;
        }
        LayerKind::GraphConv => {
            let layer = GraphConvParams::new(
                random_matrix(&mut rng, c_out, c_in),
                random_matrix(&mut rng, c_out, c_in),
                random_matrix(&mut rng, c_out, n),
                GraphBias::PerNode,
            )?;
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let adj = build_adjacency(&h)?;
            let x = random_matrix(&mut rng, c_in, n);
            let r = random_matrix(&mut rng, c_out, n);
            let (_, cache) = layer.forward(&x, &adj)?;
            let g = layer.backward(&cache, &adj, &r)?;
            let loss = |p: &GraphConvParams, x: &Matrix| dot(p.forward(x, &adj).unwrap().0.as_slice(), r.as_slice());

            probe.check("input", x.as_slice(), g.input.as_slice(), |t| loss(&layer, &reshaped(&x, t)))?;
            probe.check("w1", layer.w1.value.as_slice(), g.w1.as_slice(), |t| {
                let mut p = layer.clone();
                p.w1.value = reshaped(&layer.w1.value, t);
                loss(&p, &x)
            })?;
            probe.check("w2", layer.w2.value.as_slice(), g.w2.as_slice(), |t| {
                let mut p = layer.clone();
                p.w2.value = reshaped(&layer.w2.value, t);
                loss(&p, &x)
            })?;
            probe.check("bias", layer.bias.value.as_slice(), g.bias.as_slice(), |t| {
                let mut p = layer.clone();
                p.bias.value = reshaped(&layer.bias.value, t);
                loss(&p, &x)
            })?;
        }
        LayerKind::Attention => {
            let w: Vec<f64> = (0..c_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            let att = AttentionParams::new(&w, rng.random_range(-1.0..1.0))?;
            let x = random_matrix(&mut rng, c_in, n);
            let r: Vec<f64> = (0..c_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, cache) = att.forward(&x)?;
            let g = att.backward(&cache, &r)?;
            let loss = |p: &AttentionParams, x: &Matrix| dot(&p.forward(x).unwrap().0, &r);

            probe.check("input", x.as_slice(), g.input.as_slice(), |t| loss(&att, &reshaped(&x, t)))?;
            probe.check("weight", att.weight.value.as_slice(), g.weight.as_slice(), |t| {
                let mut p = att.clone();
                p.weight.value = reshaped(&att.weight.value, t);
                loss(&p, &x)
            })?;
            probe.check("bias", att.bias.value.as_slice(), g.bias.as_slice(), |t| {
                let mut p = att.clone();
                p.bias.value = reshaped(&att.bias.value, t);
                loss(&p, &x)
            })?;
        }
        LayerKind::MeanPool => {
            let x = random_matrix(&mut rng, c_in, n);
            let r: Vec<f64> = (0..c_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = super::mean_pool_backward(x.shape(), &r)?;
            probe.check("input", x.as_slice(), g.as_slice(), |t| {
                dot(&super::mean_pool(&reshaped(&x, t)), &r)
            })?;
        }
        LayerKind::Dense => {
            let b: Vec<f64> = (0..c_out).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dense = DenseParams::new(random_matrix(&mut rng, c_out, c_in), &b)?;
            let v: Vec<f64> = (0..c_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r: Vec<f64> = (0..c_out).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = dense.backward(&v, &r)?;
            let loss = |p: &DenseParams, v: &[f64]| dot(&p.forward(v).unwrap(), &r);

            probe.check("input", &v, &g.input, |t| loss(&dense, t))?;
            probe.check("weight", dense.weight.value.as_slice(), g.weight.as_slice(), |t| {
                let mut p = dense.clone();
                p.weight.value = reshaped(&dense.weight.value, t);
                loss(&p, &v)
            })?;
            probe.check("bias", dense.bias.value.as_slice(), g.bias.as_slice(), |t| {
                let mut p = dense.clone();
                p.bias.value = reshaped(&dense.bias.value, t);
                loss(&p, &v)
            })?;
        }
    }
    Ok(probe.reports)
}
