use std::fmt;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use super::{evaluate, train, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{AblationConfig, ModelConfig};

/// One seed of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRun {
    pub seed: u64,
    pub accuracy: f64,
    pub recall: f64,
    pub f1: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    /// 1–7.
    pub number: usize,
    pub ablation: AblationConfig,
    pub runs: Vec<AblationRun>,
    /// Messages of seeds that failed; those seeds are absent from `runs`.
    pub failures: Vec<String>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl AblationRow {
    pub fn accuracy(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.accuracy))
    }

    pub fn recall(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.recall))
    }

    pub fn f1(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.f1))
    }

    /// Population standard deviation of the accuracy over seeds.
    pub fn accuracy_std(&self) -> f64 {
        let m = self.accuracy();
        mean(self.runs.iter().map(|r| (r.accuracy - m).powi(2))).sqrt()
    }

    /// Every seed trained to a final loss below its epoch-0 loss.
    pub fn loss_decreased(&self) -> bool {
        !self.runs.is_empty() && self.failures.is_empty() && self.runs.iter().all(|r| r.final_loss < r.initial_loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

/// Trains every legal module combination, in table order, once per seed.
/// Seed `i` initializes with `base.seed + i` and shuffles with
/// `train_config.seed + i`. A failing seed is recorded and the suite
/// continues.
pub fn run_ablation_suite(
    train_set: &Dataset,
    test_set: &Dataset,
    base: &ModelConfig,
    train_config: &TrainConfig,
    seeds: usize,
) -> Result<AblationTable> {
    if seeds == 0 {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(AblationConfig::TABLE_ROWS.len());
    for (i, &ablation) in AblationConfig::TABLE_ROWS.iter().enumerate() {
        let mut row = AblationRow {
            number: i + 1,
            ablation,
            runs: Vec::with_capacity(seeds),
            failures: Vec::new(),
        };
        for k in 0..seeds as u64 {
            let mcfg = ModelConfig {
                ablation,
                seed: base.seed.wrapping_add(k),
                ..base.clone()
            };
            let tcfg = TrainConfig {
                seed: train_config.seed.wrapping_add(k),
                ..train_config.clone()
            };
            let run = train(train_set, None, &mcfg, &tcfg).and_then(|out| {
                let m = evaluate(test_set, &out.model)?;
                Ok(AblationRun {
                    seed: mcfg.seed,
                    accuracy: m.overall_accuracy,
                    recall: m.macro_recall,
                    f1: m.macro_f1,
                    initial_loss: out.log.first().map_or(f64::NAN, |r| r.train_loss),
                    final_loss: out.log.last().map_or(f64::NAN, |r| r.train_loss),
                })
            });
            match run {
                Ok(r) => {
                    info!("row {} ({ablation}) seed {}: accuracy {:.2}", row.number, r.seed, r.accuracy);
                    row.runs.push(r);
                }
                Err(e) => {
                    warn!("row {} ({ablation}) seed {} failed: {e}", row.number, mcfg.seed);
                    row.failures.push(format!("seed {}: {e}", mcfg.seed));
                }
            }
        }
        rows.push(row);
    }
    Ok(AblationTable { rows })
}

impl AblationTable {
    /// The row with the highest mean accuracy.
    pub fn best(&self) -> Option<&AblationRow> {
        self.rows
            .iter()
            .filter(|r| !r.runs.is_empty())
            .max_by(|a, b| a.accuracy().total_cmp(&b.accuracy()))
    }

    pub fn full_model(&self) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.ablation == AblationConfig::FULL)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(w, "row,a,b,c,accuracy,recall,f1,accuracy_std,seeds,failures").map_err(io)?;
        for r in &self.rows {
            let flag = |b: bool| u8::from(b);
            writeln!(
                w,
                "{},{},{},{},{:.2},{:.2},{:.2},{:.2},{},{}",
                r.number,
                flag(r.ablation.local_conv),
                flag(r.ablation.graph_conv),
                flag(r.ablation.attention),
                r.accuracy(),
                r.recall(),
                r.f1(),
                r.accuracy_std(),
                r.runs.len(),
                r.failures.len()
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Per seed: `row,ablation,seed,accuracy,recall,f1,initial_loss,final_loss`.
    pub fn write_runs_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(w, "row,ablation,seed,accuracy,recall,f1,initial_loss,final_loss").map_err(io)?;
        for r in &self.rows {
            for run in &r.runs {
                writeln!(
                    w,
                    "{},{},{},{:.2},{:.2},{:.2},{},{}",
                    r.number, r.ablation, run.seed, run.accuracy, run.recall, run.f1, run.initial_loss, run.final_loss
                )
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<4} {:^5} {:^5} {:^5} {:>9} {:>9} {:>9}", "No.", "a", "b", "c", "Accuracy", "Recall", "F1-score")?;
        for r in &self.rows {
            let mark = |b: bool| if b { "✓" } else { "" };
            write!(
                f,
                "{:<4} {:^5} {:^5} {:^5}",
                r.number,
                mark(r.ablation.local_conv),
                mark(r.ablation.graph_conv),
                mark(r.ablation.attention)
            )?;
            if r.runs.is_empty() {
                writeln!(f, " {:>9} {:>9} {:>9}", "failed", "-", "-")?;
            } else {
                writeln!(f, " {:>9.2} {:>9.2} {:>9.2}", r.accuracy(), r.recall(), r.f1())?;
            }
        }
        writeln!(f, "a: local convolution, b: graph convolution, c: attention pooling")
    }
}
