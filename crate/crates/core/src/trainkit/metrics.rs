use std::fmt;
use std::io::Write;
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::HrrpGraphNet;

/// Samples per eval-mode forward pass; bounds the cache memory.
const EVAL_CHUNK: usize = 64;

/// Classification quality. Rates are percentages in [0, 100].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Recall of each class.
    pub per_class_accuracy: Vec<f64>,
    pub per_class_precision: Vec<f64>,
    pub per_class_f1: Vec<f64>,
    /// Mean of `per_class_accuracy`.
    pub average_accuracy: f64,
    /// Correct predictions over all samples.
    pub overall_accuracy: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_predictions(labels: &[usize], predictions: &[usize], classes: usize) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(Error::Usage(format!(
                "{} labels but {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&y, &p) in labels.iter().zip(predictions) {
            if y >= classes || p >= classes {
                return Err(Error::Usage(format!("class index out of range for {classes} classes")));
            }
            confusion[y][p] += 1;
        }
        let mut recall = Vec::with_capacity(classes);
        let mut precision = Vec::with_capacity(classes);
        let mut f1 = Vec::with_capacity(classes);
        for c in 0..classes {
            let tp = confusion[c][c];
            let members: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            if members == 0 && predicted == 0 {
                warn!("class {c} has no samples and no predictions; its F1 counts as 0");
            }
            let r = pct(tp, members);
            let p = pct(tp, predicted);
            recall.push(r);
            precision.push(p);
            f1.push(if r + p > 0.0 { 2.0 * r * p / (r + p) } else { 0.0 });
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / classes.max(1) as f64;
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        Ok(Self {
            average_accuracy: mean(&recall),
            macro_recall: mean(&recall),
            macro_f1: mean(&f1),
            overall_accuracy: pct(correct, labels.len()),
            per_class_accuracy: recall,
            per_class_precision: precision,
            per_class_f1: f1,
            confusion,
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Per-class rows followed by an `average` row, two decimals.
    pub fn write_csv(&self, path: &Path, class_names: &[String]) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(w, "class,accuracy,precision,f1").map_err(io)?;
        for c in 0..self.confusion.len() {
            writeln!(
                w,
                "{},{:.2},{:.2},{:.2}",
                class_names.get(c).map_or("?", String::as_str),
                self.per_class_accuracy[c],
                self.per_class_precision[c],
                self.per_class_f1[c]
            )
            .map_err(io)?;
        }
        let mean_precision = self.per_class_precision.iter().sum::<f64>() / self.confusion.len().max(1) as f64;
        writeln!(w, "average,{:.2},{:.2},{:.2}", self.average_accuracy, mean_precision, self.macro_f1).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_confusion_csv(&self, path: &Path, class_names: &[String]) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut text = String::from("true\\predicted");
        for name in class_names {
            text.push(',');
            text.push_str(name);
        }
        text.push('\n');
        for (name, row) in class_names.iter().zip(&self.confusion) {
            text.push_str(name);
            for v in row {
                text.push_str(&format!(",{v}"));
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(io)
    }

    pub fn table<'a>(&'a self, class_names: &'a [String]) -> MetricsTable<'a> {
        MetricsTable {
            metrics: self,
            class_names,
        }
    }
}

/// Plain-text rendering: one column per class plus the average, then the
/// confusion matrix.
pub struct MetricsTable<'a> {
    metrics: &'a Metrics,
    class_names: &'a [String],
}

impl fmt::Display for MetricsTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.metrics;
        let width = self.class_names.iter().map(|n| n.len()).max().unwrap_or(0).max(9);
        write!(f, "{:<10}", "")?;
        for name in self.class_names {
            write!(f, " {name:>width$}")?;
        }
        writeln!(f, " {:>width$}", "Average")?;
        write!(f, "{:<10}", "Accuracy")?;
        for a in &m.per_class_accuracy {
            write!(f, " {a:>width$.2}")?;
        }
        writeln!(f, " {:>width$.2}", m.average_accuracy)?;
        write!(f, "{:<10}", "F1-score")?;
        for a in &m.per_class_f1 {
            write!(f, " {a:>width$.2}")?;
        }
        writeln!(f, " {:>width$.2}", m.macro_f1)?;
        writeln!(f, "\nconfusion (rows: true, columns: predicted)")?;
        for (name, row) in self.class_names.iter().zip(&m.confusion) {
            write!(f, "{name:<10}")?;
            for v in row {
                write!(f, " {v:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Eval-mode metrics of `model` over `dataset`.
pub fn evaluate(dataset: &Dataset, model: &HrrpGraphNet) -> Result<Metrics> {
    if dataset.classes() > model.config.classes {
        return Err(Error::Usage(format!(
            "dataset has {} classes but the model predicts {}",
            dataset.classes(),
            model.config.classes
        )));
    }
    let mut predictions = Vec::with_capacity(dataset.len());
    for chunk in dataset.samples.chunks(EVAL_CHUNK) {
        predictions.extend(model.predict_batch(chunk)?);
    }
    Metrics::from_predictions(&dataset.labels(), &predictions, model.config.classes)
}
