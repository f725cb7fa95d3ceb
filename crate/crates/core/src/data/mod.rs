//! Datasets of range profiles: synthetic generation, normalization, CSV
//! storage with a JSON manifest sidecar, and train/test splitting.

mod csvio;
mod synth;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use csvio::{load_csv, manifest_path, save_csv, save_dataset};
pub use synth::{synth_generate, GeneratorSpec, ScattererSpec, SynthClassSpec, DEFAULT_SPEC_JSON, TOY_SPEC_JSON};

use crate::error::{Error, Result};
use crate::graphgen::HrrpSample;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Divide each profile by its peak so the maximum becomes 1.
    #[default]
    MaxAbs,
    /// Scale each profile to unit Euclidean norm.
    L2,
    None,
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_abs" => Ok(NormMode::MaxAbs),
            "l2" => Ok(NormMode::L2),
            "none" => Ok(NormMode::None),
            _ => Err(Error::Config(format!("normalization '{s}': expected max_abs, l2 or none"))),
        }
    }
}

/// Shape and provenance of a dataset; stored next to the CSV as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_cells: usize,
    pub classes: usize,
    pub class_names: Vec<String>,
    /// Free-form origin, e.g. `synthetic` or the CSV path it was read from.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    /// Cells added to every scatterer position at generation time.
    #[serde(default)]
    pub position_offset: f64,
    #[serde(default = "raw")]
    pub normalization: NormMode,
}

fn raw() -> NormMode {
    NormMode::None
}

impl Manifest {
    pub fn new(n_cells: usize, class_names: Vec<String>, source: impl Into<String>) -> Self {
        Self {
            n_cells,
            classes: class_names.len(),
            class_names,
            source: source.into(),
            generator: None,
            seed: None,
            per_class: None,
            position_offset: 0.0,
            normalization: NormMode::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<HrrpSample>,
    pub manifest: Manifest,
}

impl Dataset {
    /// Validates that every profile has `manifest.n_cells` finite, nonnegative
    /// cells and a label below `manifest.classes`.
    pub fn new(samples: Vec<HrrpSample>, manifest: Manifest) -> Result<Self> {
        if manifest.n_cells < 3 {
            return Err(Error::Format(format!("profiles need at least 3 range cells, got {}", manifest.n_cells)));
        }
        if manifest.class_names.len() != manifest.classes || manifest.classes == 0 {
            return Err(Error::Format(format!(
                "{} class names for {} classes",
                manifest.class_names.len(),
                manifest.classes
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != manifest.n_cells {
                return Err(Error::Format(format!(
                    "sample {i} has {} cells, expected {}",
                    s.len(),
                    manifest.n_cells
                )));
            }
            if s.label >= manifest.classes {
                return Err(Error::Format(format!(
                    "sample {i} has label {} but there are {} classes",
                    s.label, manifest.classes
                )));
            }
            if s.amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::Format(format!("sample {i} has a negative or non-finite amplitude")));
            }
        }
        Ok(Self { samples, manifest })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_cells(&self) -> usize {
        self.manifest.n_cells
    }

    pub fn classes(&self) -> usize {
        self.manifest.classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.manifest.class_names
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    fn with_samples(&self, samples: Vec<HrrpSample>, source: String) -> Dataset {
        let mut manifest = self.manifest.clone();
        manifest.source = source;
        Dataset { samples, manifest }
    }
}

pub fn normalize_profile(amplitudes: &mut [f64], mode: NormMode) {
    let scale = match mode {
        NormMode::MaxAbs => amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs())),
        NormMode::L2 => amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt(),
        NormMode::None => return,
    };
    if scale > 0.0 {
        amplitudes.iter_mut().for_each(|a| *a /= scale);
    }
}

/// Per-profile normalization. All-zero profiles are left untouched.
pub fn normalize(dataset: &Dataset, mode: NormMode) -> Dataset {
    let mut out = dataset.clone();
    for s in &mut out.samples {
        normalize_profile(&mut s.amplitudes, mode);
    }
    if mode != NormMode::None {
        out.manifest.normalization = mode;
    }
    out
}

/// Splits into (train, test). Each part keeps the original sample order.
///
/// Stratified splits take `round(count · train_fraction)` of every class
/// (at least one sample on each side), so per-class proportions match to
/// within one sample.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64, stratified: bool) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction must be in (0, 1), got {train_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = |n: usize| ((n as f64 * train_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));

    let groups: Vec<Vec<usize>> = if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in dataset.samples.iter().enumerate() {
            by_class.entry(s.label).or_default().push(i);
        }
        if let Some((c, idx)) = by_class.iter().find(|(_, idx)| idx.len() < 2) {
            return Err(Error::Config(format!(
                "class {c} has {} sample(s); a stratified split needs at least 2",
                idx.len()
            )));
        }
        by_class.into_values().collect()
    } else {
        if dataset.len() < 2 {
            return Err(Error::Config("cannot split fewer than 2 samples".into()));
        }
        vec![(0..dataset.len()).collect()]
    };

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for mut group in groups {
        group.shuffle(&mut rng);
        let n_train = take(group.len());
        train_idx.extend_from_slice(&group[..n_train]);
        test_idx.extend_from_slice(&group[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.samples[i].clone()).collect::<Vec<_>>();
    let tag = format!("{} (split seed {seed}, fraction {train_fraction})", dataset.manifest.source);
    Ok((
        dataset.with_samples(pick(&train_idx), format!("{tag}, train")),
        dataset.with_samples(pick(&test_idx), format!("{tag}, test")),
    ))
}
