//! The assembled network, run over mini-batches.
//!
//! Full pipeline per profile:
//!
//! ```text
//! graph → [conv → BN → LeakyReLU] × 2 → graph conv → attention pool → dense → log-softmax
//! ```
//!
//! Ablations drop stages: without local convolution the graph stage sees the
//! raw 1-channel amplitudes, without the graph convolution features go
//! straight to pooling, and without attention the pool is a uniform mean.
//! Batch norm couples the samples of a batch, so forward and backward work
//! in phases: per-sample work fans out with rayon, batch statistics are a
//! sequential reduction in sample order.

use std::sync::Arc;

use rayon::prelude::*;

use super::params::{GradBuffer, TensorId};
use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::graphgen::{DistanceKernel, FactoredAdjacency, HrrpSample};
use crate::layers::{mean_pool, mean_pool_backward, AttentionCache, BatchNormCache, GraphConvCache};
use crate::numerics::{argmax, leaky_relu, leaky_relu_backward, log_softmax, Matrix};

#[derive(Clone, Debug)]
pub struct HrrpGraphNet {
    pub config: ModelConfig,
    pub params: ModelParams,
    /// Optimizer steps taken so far.
    pub step: u64,
    kernel: Arc<DistanceKernel>,
}

#[derive(Clone, Debug)]
struct LocalCache {
    /// conv1 output / BN1 pre-activation / conv2 input / BN2 pre-activation.
    bn1_out: Matrix,
    act1: Matrix,
    bn2_out: Matrix,
}

#[derive(Clone, Debug)]
enum PoolCache {
    Attention(AttentionCache),
    Mean { shape: (usize, usize) },
}

#[derive(Clone, Debug)]
struct SampleCache {
    input: Matrix,
    adjacency: FactoredAdjacency,
    local: Option<LocalCache>,
    graph: Option<GraphConvCache>,
    pool: PoolCache,
    pooled: Vec<f64>,
    log_probs: Vec<f64>,
}

/// Intermediates of one batched forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub training: bool,
    ablation: super::AblationConfig,
    samples: Vec<SampleCache>,
    bn1: Option<BatchNormCache>,
    bn2: Option<BatchNormCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.samples.len()
    }

    pub fn log_probs(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.log_probs.as_slice())
    }
}

/// `−log_probs[label]`.
pub fn loss(log_probs: &[f64], label: usize) -> Result<f64> {
    log_probs
        .get(label)
        .map(|lp| -lp)
        .ok_or_else(|| Error::Usage(format!("label {label} out of range for {} classes", log_probs.len())))
}

/// Mean cross-entropy over a batch.
pub fn batch_loss(cache: &ForwardCache, labels: &[usize]) -> Result<f64> {
    if labels.len() != cache.batch_size() {
        return Err(Error::Usage(format!(
            "{} labels for a batch of {}",
            labels.len(),
            cache.batch_size()
        )));
    }
    let total: f64 = cache
        .log_probs()
        .zip(labels)
        .map(|(lp, &y)| loss(lp, y))
        .sum::<Result<f64>>()?;
    Ok(total / labels.len() as f64)
}

impl HrrpGraphNet {
    /// A freshly initialized network (see [`ModelParams::init`]).
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Self::from_params(config, params)
    }

    pub fn from_params(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        let kernel = Arc::new(DistanceKernel::new(config.n_cells));
        Ok(Self {
            config,
            params,
            step: 0,
            kernel,
        })
    }

    fn check_samples(&self, samples: &[HrrpSample]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Usage("forward over an empty batch".into()));
        }
        for s in samples {
            if s.len() != self.config.n_cells {
                return Err(Error::shape("forward", (1, s.len()), (1, self.config.n_cells)));
            }
        }
        Ok(())
    }

    pub fn forward_batch(&self, samples: &[HrrpSample], training: bool) -> Result<ForwardCache> {
        self.check_samples(samples)?;
        let p = &self.params;
        let cfg = &self.config;
        let slope = cfg.leaky_slope;

        let inputs: Vec<(Matrix, FactoredAdjacency)> = samples
            .iter()
            .map(|s| {
                Ok((
                    Matrix::row_vector(&s.amplitudes)?,
                    FactoredAdjacency::new(s.amplitudes.clone(), self.kernel.clone())?,
                ))
            })
            .collect::<Result<_>>()?;

        let (features, locals, bn1, bn2) = if cfg.ablation.local_conv {
            let z1: Vec<Matrix> = inputs
                .par_iter()
                .map(|(x, _)| p.conv1.forward(x))
                .collect::<Result<_>>()?;
            let (y1, bn1) = p.bn1.forward(&z1, training)?;
            let stage2: Vec<(Matrix, Matrix)> = y1
                .par_iter()
                .map(|y| {
                    let act = leaky_relu(y, slope);
                    let z2 = p.conv2.forward(&act)?;
                    Ok((act, z2))
                })
                .collect::<Result<_>>()?;
            let z2: Vec<Matrix> = stage2.iter().map(|(_, z)| z.clone()).collect();
            let (y2, bn2) = p.bn2.forward(&z2, training)?;
            let features: Vec<Matrix> = y2.iter().map(|y| leaky_relu(y, slope)).collect();
            let locals: Vec<Option<LocalCache>> = y1
                .into_iter()
                .zip(stage2)
                .zip(y2)
                .map(|((bn1_out, (act1, _)), bn2_out)| {
                    Some(LocalCache {
                        bn1_out,
                        act1,
                        bn2_out,
                    })
                })
                .collect();
            (features, locals, Some(bn1), Some(bn2))
        } else {
            let features = inputs.iter().map(|(x, _)| x.clone()).collect();
            (features, vec![None; samples.len()], None, None)
        };

        let samples: Vec<SampleCache> = inputs
            .into_par_iter()
            .zip(features)
            .zip(locals)
            .map(|(((input, adjacency), x), local)| {
                let (x, graph) = if cfg.ablation.graph_conv {
                    let (y, cache) = p.gconv.forward(&x, &adjacency)?;
                    (y, Some(cache))
                } else {
                    (x, None)
                };
                let (pooled, pool) = if cfg.ablation.attention {
                    let (v, cache) = p.att.forward(&x)?;
                    (v, PoolCache::Attention(cache))
                } else {
                    (mean_pool(&x), PoolCache::Mean { shape: x.shape() })
                };
                let logits = p.fc.forward(&pooled)?;
                let log_probs = log_softmax(&logits)?;
                Ok(SampleCache {
                    input,
                    adjacency,
                    local,
                    graph,
                    pool,
                    pooled,
                    log_probs,
                })
            })
            .collect::<Result<_>>()?;

        Ok(ForwardCache {
            training,
            ablation: cfg.ablation,
            samples,
            bn1,
            bn2,
        })
    }

    /// Single-profile forward; returns the class log-probabilities.
    pub fn forward(&self, sample: &HrrpSample, training: bool) -> Result<(Vec<f64>, ForwardCache)> {
        let cache = self.forward_batch(std::slice::from_ref(sample), training)?;
        let lp = cache.samples[0].log_probs.clone();
        Ok((lp, cache))
    }

    /// Eval-mode class prediction; ties go to the lowest class index.
    pub fn predict(&self, sample: &HrrpSample) -> Result<usize> {
        let (lp, _) = self.forward(sample, false)?;
        Ok(argmax(&lp))
    }

    pub fn predict_batch(&self, samples: &[HrrpSample]) -> Result<Vec<usize>> {
        let cache = self.forward_batch(samples, false)?;
        Ok(cache.log_probs().map(argmax).collect())
    }

    /// Folds the batch statistics of a training-mode forward into the BN
    /// running estimates.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if let Some(c) = &cache.bn1 {
            self.params.bn1.update_running_stats(c);
        }
        if let Some(c) = &cache.bn2 {
            self.params.bn2.update_running_stats(c);
        }
    }

    /// Gradients of the mean batch cross-entropy; overwrites every gradient
    /// slot. Tensors of disabled modules end up exactly zero.
    pub fn backward(&mut self, cache: &ForwardCache, labels: &[usize]) -> Result<()> {
        let grads = self.gradients(cache, labels)?;
        for id in TensorId::ALL {
            self.params.param_mut(id).grad = grads.0[id.index()].clone();
        }
        Ok(())
    }

    pub(crate) fn gradients(&self, cache: &ForwardCache, labels: &[usize]) -> Result<GradBuffer> {
        let cfg = &self.config;
        let p = &self.params;
        if cache.ablation != cfg.ablation {
            return Err(Error::Usage(format!(
                "cache was produced with ablation '{}' but the model uses '{}'",
                cache.ablation, cfg.ablation
            )));
        }
        if labels.len() != cache.batch_size() {
            return Err(Error::Usage(format!(
                "{} labels for a batch of {}",
                labels.len(),
                cache.batch_size()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= cfg.classes) {
            return Err(Error::Usage(format!("label {bad} out of range for {} classes", cfg.classes)));
        }
        let scale = 1.0 / labels.len() as f64;

        // Head: loss → dense → pool → graph conv → second activation.
        let heads: Vec<(GradBuffer, Option<Matrix>)> = cache
            .samples
            .par_iter()
            .zip(labels.par_iter())
            .map(|(s, &label)| {
                let mut g = GradBuffer::zeros_like(p);
                let d_logits: Vec<f64> = s
                    .log_probs
                    .iter()
                    .enumerate()
                    .map(|(k, lp)| (lp.exp() - if k == label { 1.0 } else { 0.0 }) * scale)
                    .collect();
                let dense = p.fc.backward(&s.pooled, &d_logits)?;
                g.add(TensorId::FcWeight, &dense.weight)?;
                g.add(TensorId::FcBias, &dense.bias)?;

                let mut dx = match &s.pool {
                    PoolCache::Attention(c) => {
                        let att = p.att.backward(c, &dense.input)?;
                        g.add(TensorId::AttWeight, &att.weight)?;
                        g.add(TensorId::AttBias, &att.bias)?;
                        att.input
                    }
                    PoolCache::Mean { shape } => mean_pool_backward(*shape, &dense.input)?,
                };

                if cfg.ablation.graph_conv {
                    let gc = s
                        .graph
                        .as_ref()
                        .ok_or_else(|| Error::Usage("cache is missing graph-convolution state".into()))?;
                    let gg = p.gconv.backward(gc, &s.adjacency, &dx)?;
                    g.add(TensorId::GraphW1, &gg.w1)?;
                    g.add(TensorId::GraphW2, &gg.w2)?;
                    g.add(TensorId::GraphBias, &gg.bias)?;
                    dx = gg.input;
                }

                let d_bn2 = if cfg.ablation.local_conv {
                    let local = s
                        .local
                        .as_ref()
                        .ok_or_else(|| Error::Usage("cache is missing local-convolution state".into()))?;
                    Some(leaky_relu_backward(&local.bn2_out, &dx, cfg.leaky_slope)?)
                } else {
                    None
                };
                Ok((g, d_bn2))
            })
            .collect::<Result<_>>()?;

        let mut total = GradBuffer::zeros_like(p);
        let mut d_bn2 = Vec::with_capacity(heads.len());
        for (g, d) in heads {
            total.merge(&g)?;
            if let Some(d) = d {
                d_bn2.push(d);
            }
        }

        if cfg.ablation.local_conv {
            let (bn1_cache, bn2_cache) = match (&cache.bn1, &cache.bn2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Usage("cache is missing batch-norm state".into())),
            };
            let bn2 = p.bn2.backward(bn2_cache, &d_bn2)?;
            total.add(TensorId::Bn2Gamma, &bn2.gamma)?;
            total.add(TensorId::Bn2Beta, &bn2.beta)?;

            let mid: Vec<(GradBuffer, Matrix)> = cache
                .samples
                .par_iter()
                .zip(bn2.inputs.par_iter())
                .map(|(s, dz2)| {
                    let local = s.local.as_ref().expect("checked above");
                    let mut g = GradBuffer::zeros_like(p);
                    let c2 = p.conv2.backward(&local.act1, dz2)?;
                    g.add(TensorId::Conv2Kernels, &c2.kernels)?;
                    g.add(TensorId::Conv2Bias, &c2.bias)?;
                    let d_bn1 = leaky_relu_backward(&local.bn1_out, &c2.input, cfg.leaky_slope)?;
                    Ok((g, d_bn1))
                })
                .collect::<Result<_>>()?;
            let mut d_bn1 = Vec::with_capacity(mid.len());
            for (g, d) in mid {
                total.merge(&g)?;
                d_bn1.push(d);
            }

            let bn1 = p.bn1.backward(bn1_cache, &d_bn1)?;
            total.add(TensorId::Bn1Gamma, &bn1.gamma)?;
            total.add(TensorId::Bn1Beta, &bn1.beta)?;
            let firsts: Vec<GradBuffer> = cache
                .samples
                .par_iter()
                .zip(bn1.inputs.par_iter())
                .map(|(s, dz1)| {
                    let mut g = GradBuffer::zeros_like(p);
                    let c1 = p.conv1.backward(&s.input, dz1)?;
                    g.add(TensorId::Conv1Kernels, &c1.kernels)?;
                    g.add(TensorId::Conv1Bias, &c1.bias)?;
                    Ok(g)
                })
                .collect::<Result<_>>()?;
            for g in firsts {
                total.merge(&g)?;
            }
        }
        Ok(total)
    }
}
