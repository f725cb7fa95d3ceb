//! Whole-network finite-difference check: the analytic gradient of the mean
//! batch cross-entropy (training mode, batch statistics) against central
//! differences, one report per parameter tensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{batch_loss, AblationConfig, HrrpGraphNet, ModelConfig, TensorId};
use crate::error::Result;
use crate::graphgen::HrrpSample;
use crate::layers::gradcheck::{finite_diff_check, GradReport};

/// Small random network (N ≤ 8, ≤ 4 channels, 3 classes) with every tensor
/// randomized, including biases and BN affine terms.
pub fn random_small_model(ablation: AblationConfig, seed: u64) -> Result<(HrrpGraphNet, Vec<HrrpSample>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ModelConfig {
        n_cells: rng.random_range(3..=8),
        d_out: rng.random_range(1..=4),
        g_out: rng.random_range(1..=4),
        classes: 3,
        ablation,
        seed,
        ..ModelConfig::default()
    };
    let mut net = HrrpGraphNet::new(config.clone())?;
    for id in TensorId::ALL {
        let p = net.params.param_mut(id);
        for v in p.value.as_mut_slice() {
            *v = match id {
                TensorId::Bn1Gamma | TensorId::Bn2Gamma => rng.random_range(0.5..1.5),
                _ => rng.random_range(-1.0..1.0),
            };
        }
    }
    let batch_size = rng.random_range(2..=4);
    let batch = (0..batch_size)
        .map(|_| {
            HrrpSample::new(
                (0..config.n_cells).map(|_| rng.random_range(0.0..1.0)).collect(),
                rng.random_range(0..config.classes),
            )
        })
        .collect();
    Ok((net, batch))
}

pub fn check_model(ablation: AblationConfig, seed: u64) -> Result<Vec<GradReport>> {
    let (net, batch) = random_small_model(ablation, seed)?;
    let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
    let cache = net.forward_batch(&batch, true)?;
    let grads = net.gradients(&cache, &labels)?;

    let layer = format!("model[{ablation}]");
    let mut reports = Vec::new();
    for id in TensorId::ALL {
        let theta = net.params.param(id).value.clone();
        let mut probe = net.clone();
        let max_rel_error = finite_diff_check(
            |t| {
                probe.params.param_mut(id).value.as_mut_slice().copy_from_slice(t);
                probe
                    .forward_batch(&batch, true)
                    .and_then(|c| batch_loss(&c, &labels))
                    .unwrap_or(f64::NAN)
            },
            theta.as_slice(),
            grads.0[id.index()].as_slice(),
        )?;
        reports.push(GradReport {
            layer: layer.clone(),
            tensor: id.name().to_string(),
            max_rel_error,
        });
    }
    Ok(reports)
}
