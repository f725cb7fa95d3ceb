//! JSON checkpoint: config, every tensor by name with its shape and
//! row-major values, BN running statistics, and the optimizer step count.
//! Floats are written in shortest round-trip form and parsed back exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HrrpGraphNet, ModelConfig, ModelParams, TensorId};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const CHECKPOINT_FORMAT: &str = "hrrpgraphnet-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RunningStats {
    name: String,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    step: u64,
    tensors: Vec<TensorRecord>,
    batch_norm: Vec<RunningStats>,
}

pub fn save_checkpoint(net: &HrrpGraphNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let p = &net.params;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: VERSION,
        config: net.config.clone(),
        step: net.step,
        tensors: TensorId::ALL
            .iter()
            .map(|&id| {
                let v = &p.param(id).value;
                TensorRecord {
                    name: id.name().into(),
                    rows: v.rows(),
                    cols: v.cols(),
                    data: v.as_slice().to_vec(),
                }
            })
            .collect(),
        batch_norm: [("bn1", &p.bn1), ("bn2", &p.bn2)]
            .into_iter()
            .map(|(name, bn)| RunningStats {
                name: name.into(),
                running_mean: bn.running_mean.clone(),
                running_var: bn.running_var.clone(),
            })
            .collect(),
    };
    if let Some(t) = file.tensors.iter().find(|t| t.data.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric(format!("refusing to checkpoint non-finite values in {}", t.name)));
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer(&mut w, &file)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<HrrpGraphNet> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let file: CheckpointFile = serde_json::from_reader(reader)?;
    if file.format != CHECKPOINT_FORMAT || file.version != VERSION {
        return Err(Error::Format(format!(
            "{}: not a version-{VERSION} {CHECKPOINT_FORMAT} file",
            path.display()
        )));
    }
    file.config.validate()?;
    let mut params = ModelParams::zeros(&file.config)?;
    let mut seen = vec![false; TensorId::ALL.len()];
    for t in file.tensors {
        let id = TensorId::from_name(&t.name)
            .ok_or_else(|| Error::Format(format!("unknown tensor '{}' in checkpoint", t.name)))?;
        let slot = &mut params.param_mut(id).value;
        if slot.shape() != (t.rows, t.cols) {
            return Err(Error::Format(format!(
                "tensor {}: config implies {:?}, checkpoint has {:?}",
                t.name,
                slot.shape(),
                (t.rows, t.cols)
            )));
        }
        *slot = Matrix::new(t.rows, t.cols, t.data)
            .map_err(|_| Error::Format(format!("tensor {}: data length does not match shape", t.name)))?;
        seen[id.index()] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("checkpoint is missing tensor {}", TensorId::ALL[i].name())));
    }
    for stats in file.batch_norm {
        let bn = match stats.name.as_str() {
            "bn1" => &mut params.bn1,
            "bn2" => &mut params.bn2,
            other => return Err(Error::Format(format!("unknown batch-norm layer '{other}'"))),
        };
        if stats.running_mean.len() != bn.channels() || stats.running_var.len() != bn.channels() {
            return Err(Error::Format(format!("{}: running statistics have the wrong length", stats.name)));
        }
        bn.running_mean = stats.running_mean;
        bn.running_var = stats.running_var;
    }
    let mut net = HrrpGraphNet::from_params(file.config, params)?;
    net.step = file.step;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AblationConfig;
    use proptest::prelude::*;

    fn tiny(ablation: AblationConfig, seed: u64) -> ModelConfig {
        ModelConfig {
            n_cells: 7,
            d_out: 3,
            g_out: 2,
            classes: 4,
            ablation,
            seed,
            ..ModelConfig::default()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(
            seed in any::<u64>(),
            row in 0usize..7,
            values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6),
            step in any::<u64>(),
        ) {
            let mut net = HrrpGraphNet::new(tiny(AblationConfig::TABLE_ROWS[row], seed)).unwrap();
            net.step = step;
            // Extreme magnitudes, subnormals and signed zeros in a weight tensor.
            for (dst, v) in net.params.conv2.kernels.value.as_mut_slice().iter_mut().zip(&values) {
                *dst = *v;
            }
            net.params.bn2.running_var[1] = values[0].abs();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.ckpt");
            save_checkpoint(&net, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            prop_assert_eq!(back.step, net.step);
            prop_assert_eq!(&back.config, &net.config);
            for id in TensorId::ALL {
                let a: Vec<u64> = net.params.param(id).value.as_slice().iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = back.params.param(id).value.as_slice().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
            prop_assert_eq!(&back.params.bn2.running_var, &net.params.bn2.running_var);
            prop_assert_eq!(&back.params.bn1.running_mean, &net.params.bn1.running_mean);
        }
    }

    #[test]
    fn negative_zero_survives() {
        let mut net = HrrpGraphNet::new(tiny(AblationConfig::FULL, 1)).unwrap();
        net.params.fc.bias.value[(0, 0)] = -0.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.ckpt");
        save_checkpoint(&net, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert!(back.params.fc.bias.value[(0, 0)].is_sign_negative());
    }

    #[test]
    fn rejects_foreign_and_damaged_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, r#"{"format":"other","version":1}"#).unwrap();
        assert!(load_checkpoint(&path).is_err());

        let net = HrrpGraphNet::new(tiny(AblationConfig::FULL, 2)).unwrap();
        save_checkpoint(&net, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replace("\"fc.bias\"", "\"fc.bogus\"");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
