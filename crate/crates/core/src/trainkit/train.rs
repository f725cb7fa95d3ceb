use std::io::Write;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{adam_step, evaluate, AdamState, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graphgen::HrrpSample;
use crate::model::{batch_loss, HrrpGraphNet, ModelConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training-mode cross-entropy of the batches seen this epoch, each
    /// measured before its update. Epoch 0 is the untrained model.
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
    pub val_macro_f1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub model: HrrpGraphNet,
    pub log: Vec<EpochRecord>,
}

/// Consecutive runs of `order` of length `batch_size`. A trailing run of one
/// sample is folded into the previous batch so batch norm always sees at
/// least two samples.
pub fn batches(order: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(batch_size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * batch_size;
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

fn check_compatible(d: &Dataset, cfg: &ModelConfig, what: &str) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Usage(format!("{what} dataset is empty")));
    }
    if d.n_cells() != cfg.n_cells {
        return Err(Error::Usage(format!(
            "{what} dataset has {} range cells, model expects {}",
            d.n_cells(),
            cfg.n_cells
        )));
    }
    if d.classes() > cfg.classes {
        return Err(Error::Usage(format!(
            "{what} dataset has {} classes, model has {}",
            d.classes(),
            cfg.classes
        )));
    }
    Ok(())
}

/// Mini-batch Adam on the mean cross-entropy. The model is initialized from
/// `model_config.seed`; batches are shuffled from `train_config.seed`.
pub fn train(
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    train_config.validate()?;
    check_compatible(train_set, model_config, "training")?;
    if let Some(v) = val_set {
        check_compatible(v, model_config, "validation")?;
    }
    if train_set.len() < 2 {
        return Err(Error::Usage("training needs at least 2 samples (batch norm)".into()));
    }

    let mut model = HrrpGraphNet::new(model_config.clone())?;
    let mut state = AdamState::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(train_config.epochs + 1);

    let gather = |idx: &[usize]| -> (Vec<HrrpSample>, Vec<usize>) {
        let samples: Vec<HrrpSample> = idx.iter().map(|&i| train_set.samples[i].clone()).collect();
        let labels = samples.iter().map(|s| s.label).collect();
        (samples, labels)
    };

    for epoch in 0..=train_config.epochs {
        if epoch > 0 && train_config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for idx in batches(&order, train_config.batch_size) {
            let (samples, labels) = gather(idx);
            let cache = model.forward_batch(&samples, true)?;
            let loss = batch_loss(&cache, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("training loss became {loss} in epoch {epoch}")));
            }
            loss_sum += loss * idx.len() as f64;
            if epoch == 0 {
                continue;
            }
            model.backward(&cache, &labels)?;
            model.update_running_stats(&cache);
            model.step += 1;
            adam_step(&mut model.params, &mut state, model.step, train_config)?;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val = val_set.map(|v| evaluate(v, &model)).transpose()?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_accuracy: val.as_ref().map(|m| m.overall_accuracy),
            val_macro_f1: val.as_ref().map(|m| m.macro_f1),
        };
        match record.val_accuracy {
            Some(acc) => info!("epoch {epoch:>3}  loss {train_loss:.5}  val acc {acc:.2}"),
            None => info!("epoch {epoch:>3}  loss {train_loss:.5}"),
        }
        log.push(record);
    }
    Ok(TrainOutcome { model, log })
}

/// `epoch,train_loss,val_accuracy,val_macro_f1`; validation columns are
/// empty when no validation set was given.
pub fn write_epoch_log(path: &Path, log: &[EpochRecord]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "epoch,train_loss,val_accuracy,val_macro_f1").map_err(io)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.2}"));
    for r in log {
        writeln!(w, "{},{},{},{}", r.epoch, r.train_loss, opt(r.val_accuracy), opt(r.val_macro_f1)).map_err(io)?;
    }
    w.flush().map_err(io)
}
