//! Per-channel batch normalization for channels × positions feature maps.
//!
//! Training mode normalizes each channel with statistics pooled over every
//! batch element and every position, using the population variance. The
//! same population variance feeds the running-statistics update.

use super::Param;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

#[derive(Clone, Debug)]
pub struct BatchNormCache {
    pub training: bool,
    /// Normalized inputs, one per batch element.
    pub normalized: Vec<Matrix>,
    /// Statistics used for normalization (batch stats in training mode).
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub inv_std: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BatchNormGrads {
    pub inputs: Vec<Matrix>,
    pub gamma: Matrix,
    pub beta: Matrix,
}

impl BatchNormParams {
    pub fn new(channels: usize, eps: f64, momentum: f64) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Config(format!("bn_eps must be > 0, got {eps}")));
        }
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::Config(format!("bn_momentum must be in (0, 1), got {momentum}")));
        }
        let mut gamma = Matrix::zeros(channels, 1);
        gamma.fill(1.0);
        Ok(Self {
            gamma: Param::new(gamma),
            beta: Param::new(Matrix::zeros(channels, 1)),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            eps,
            momentum,
        })
    }

    pub fn channels(&self) -> usize {
        self.gamma.value.rows()
    }

    fn check_batch(&self, xs: &[Matrix]) -> Result<usize> {
        let first = xs
            .first()
            .ok_or_else(|| Error::Usage("batch norm over an empty batch".into()))?;
        if first.rows() != self.channels() {
            return Err(Error::shape("batchnorm", first.shape(), self.gamma.shape()));
        }
        if let Some(bad) = xs.iter().find(|x| x.shape() != first.shape()) {
            return Err(Error::shape("batchnorm", first.shape(), bad.shape()));
        }
        Ok(first.cols())
    }

    pub fn forward(&self, xs: &[Matrix], training: bool) -> Result<(Vec<Matrix>, BatchNormCache)> {
        let positions = self.check_batch(xs)?;
        let channels = self.channels();
        let (mean, var) = if training {
            if xs.len() < 2 {
                return Err(Error::Config(format!(
                    "batch norm in training mode needs a batch of at least 2, got {}",
                    xs.len()
                )));
            }
            let count = (xs.len() * positions) as f64;
            let mut mean = vec![0.0; channels];
            let mut var = vec![0.0; channels];
            for c in 0..channels {
                mean[c] = xs.iter().map(|x| x.row(c).iter().sum::<f64>()).sum::<f64>() / count;
                var[c] = xs
                    .iter()
                    .map(|x| x.row(c).iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>())
                    .sum::<f64>()
                    / count;
            }
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();

        let mut normalized = Vec::with_capacity(xs.len());
        let mut outputs = Vec::with_capacity(xs.len());
        for x in xs {
            let xhat = Matrix::from_fn(channels, positions, |c, n| (x[(c, n)] - mean[c]) * inv_std[c]);
            let y = Matrix::from_fn(channels, positions, |c, n| {
                self.gamma.value[(c, 0)] * xhat[(c, n)] + self.beta.value[(c, 0)]
            });
            normalized.push(xhat);
            outputs.push(y);
        }
        Ok((
            outputs,
            BatchNormCache {
                training,
                normalized,
                mean,
                var,
                inv_std,
            },
        ))
    }

    /// Folds the batch statistics of a training-mode forward into the
    /// running estimates. No-op for an eval-mode cache.
    pub fn update_running_stats(&mut self, cache: &BatchNormCache) {
        if !cache.training {
            return;
        }
        let m = self.momentum;
        for c in 0..self.channels() {
            self.running_mean[c] = (1.0 - m) * self.running_mean[c] + m * cache.mean[c];
            self.running_var[c] = (1.0 - m) * self.running_var[c] + m * cache.var[c];
        }
    }

    pub fn backward(&self, cache: &BatchNormCache, upstream: &[Matrix]) -> Result<BatchNormGrads> {
        if upstream.len() != cache.normalized.len() {
            return Err(Error::Usage(format!(
                "batchnorm backward got {} upstream gradients for a batch of {}",
                upstream.len(),
                cache.normalized.len()
            )));
        }
        let positions = self.check_batch(upstream)?;
        let channels = self.channels();
        let count = (upstream.len() * positions) as f64;

        let mut dgamma = Matrix::zeros(channels, 1);
        let mut dbeta = Matrix::zeros(channels, 1);
        for c in 0..channels {
            for (g, xhat) in upstream.iter().zip(&cache.normalized) {
                dbeta[(c, 0)] += g.row(c).iter().sum::<f64>();
                dgamma[(c, 0)] += g.row(c).iter().zip(xhat.row(c)).map(|(a, b)| a * b).sum::<f64>();
            }
        }

        let inputs = upstream
            .iter()
            .zip(&cache.normalized)
            .map(|(g, xhat)| {
                Matrix::from_fn(channels, positions, |c, n| {
                    let gamma = self.gamma.value[(c, 0)];
                    if cache.training {
                        // Σ dxhat = γ·Σdy and Σ dxhat·xhat = γ·Σ dy·xhat.
                        gamma * cache.inv_std[c] / count
                            * (count * g[(c, n)] - dbeta[(c, 0)] - xhat[(c, n)] * dgamma[(c, 0)])
                    } else {
                        gamma * cache.inv_std[c] * g[(c, n)]
                    }
                })
            })
            .collect();

        Ok(BatchNormGrads {
            inputs,
            gamma: dgamma,
            beta: dbeta,
        })
    }
}
