//! Point-scatterer profile generator.
//!
//! Each class is a set of Gaussian pulses. Per sample the whole target is
//! shifted by a uniform jitter, every scatterer gets a multiplicative
//! amplitude factor and may be occluded, and Gaussian noise is added before
//! taking the magnitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Manifest, NormMode};
use crate::error::{Error, Result};
use crate::graphgen::HrrpSample;

/// Three aircraft-like classes with N = 501.
pub const DEFAULT_SPEC_JSON: &str = include_str!("../../../../specs/default3.json");
/// Two classes with one scatterer each at disjoint positions, N = 32.
pub const TOY_SPEC_JSON: &str = include_str!("../../../../specs/toy2.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    /// Range cell of the pulse centre; may be fractional.
    pub position: f64,
    pub amplitude: f64,
    /// Pulse standard deviation in cells.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthClassSpec {
    pub name: String,
    pub scatterers: Vec<ScattererSpec>,
    #[serde(default)]
    pub position_jitter: f64,
    #[serde(default)]
    pub amplitude_jitter: f64,
    #[serde(default)]
    pub dropout_prob: f64,
    #[serde(default)]
    pub noise_sigma: f64,
}

impl SynthClassSpec {
    fn validate(&self, n_cells: usize) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("class '{}': {what}", self.name)));
        if self.scatterers.is_empty() {
            return bad("needs at least one scatterer".into());
        }
        for (k, s) in self.scatterers.iter().enumerate() {
            if !(s.position >= 0.0 && s.position < n_cells as f64) {
                return bad(format!("scatterer {k} position {} outside [0, {n_cells})", s.position));
            }
            if !(s.amplitude > 0.0 && s.amplitude.is_finite()) {
                return bad(format!("scatterer {k} amplitude must be > 0, got {}", s.amplitude));
            }
            if !(s.width > 0.0 && s.width.is_finite()) {
                return bad(format!("scatterer {k} width must be > 0, got {}", s.width));
            }
        }
        if !(self.position_jitter >= 0.0 && self.position_jitter.is_finite()) {
            return bad(format!("position_jitter must be >= 0, got {}", self.position_jitter));
        }
        if !(0.0..1.0).contains(&self.amplitude_jitter) {
            return bad(format!("amplitude_jitter must be in [0, 1), got {}", self.amplitude_jitter));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return bad(format!("dropout_prob must be in [0, 1), got {}", self.dropout_prob));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        Ok(())
    }

    fn shifted(&self, offset: f64) -> SynthClassSpec {
        let mut out = self.clone();
        out.scatterers.iter_mut().for_each(|s| s.position += offset);
        out
    }
}

fn default_offset() -> f64 {
    0.5
}

/// Contents of a generator spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub classes: Vec<SynthClassSpec>,
    /// Cells added to every scatterer position when drawing the test split.
    #[serde(default = "default_offset")]
    pub test_position_offset: f64,
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("generator spec: {e}")))
    }

    pub fn default_benchmark() -> Self {
        Self::from_json(DEFAULT_SPEC_JSON).expect("shipped spec parses")
    }

    pub fn toy() -> Self {
        Self::from_json(TOY_SPEC_JSON).expect("shipped spec parses")
    }

    pub fn generate(&self, per_class: usize, n_cells: usize, seed: u64) -> Result<Dataset> {
        let mut d = synth_generate(&self.classes, per_class, n_cells, seed)?;
        d.manifest.generator = Some(self.clone());
        Ok(d)
    }

    /// Train and test sets. The test set uses its own seed stream and every
    /// scatterer moved by `test_position_offset` cells.
    pub fn generate_split(&self, per_class: usize, n_cells: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        let train = self.generate(per_class, n_cells, seed)?;
        let shifted: Vec<SynthClassSpec> = self.classes.iter().map(|c| c.shifted(self.test_position_offset)).collect();
        let test_seed = test_seed(seed);
        let mut test = synth_generate(&shifted, per_class, n_cells, test_seed)?;
        test.manifest.generator = Some(self.clone());
        test.manifest.position_offset = self.test_position_offset;
        test.manifest.source = "synthetic (test split)".into();
        Ok((train, test))
    }
}

fn test_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Generates `per_class` raw (unnormalized) profiles for each class, classes
/// in order. The label of a sample is the index of its spec.
pub fn synth_generate(specs: &[SynthClassSpec], per_class: usize, n_cells: usize, seed: u64) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(Error::Config("generator needs at least one class".into()));
    }
    if per_class == 0 {
        return Err(Error::Config("per_class must be >= 1".into()));
    }
    if n_cells < 3 {
        return Err(Error::Config(format!("n_cells must be >= 3, got {n_cells}")));
    }
    for spec in specs {
        spec.validate(n_cells)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(specs.len() * per_class);
    for (label, spec) in specs.iter().enumerate() {
        let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        for _ in 0..per_class {
            let jitter = uniform(&mut rng, spec.position_jitter);
            let mut signal = vec![0.0; n_cells];
            for s in &spec.scatterers {
                let factor = 1.0 + uniform(&mut rng, spec.amplitude_jitter);
                let keep = rng.random::<f64>() >= spec.dropout_prob;
                if !keep {
                    continue;
                }
                let centre = s.position + jitter;
                let inv = 1.0 / (2.0 * s.width * s.width);
                for (n, v) in signal.iter_mut().enumerate() {
                    let d = n as f64 - centre;
                    *v += s.amplitude * factor * (-d * d * inv).exp();
                }
            }
            if spec.noise_sigma > 0.0 {
                signal.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
            }
            signal.iter_mut().for_each(|v| *v = v.abs());
            samples.push(HrrpSample::new(signal, label));
        }
    }

    let names = specs.iter().map(|s| s.name.clone()).collect();
    let mut manifest = Manifest::new(n_cells, names, "synthetic");
    manifest.seed = Some(seed);
    manifest.per_class = Some(per_class);
    manifest.normalization = NormMode::None;
    Dataset::new(samples, manifest)
}

/// U(−half, half); zero width draws nothing so the stream stays aligned
/// with specs that differ only in unused jitters.
fn uniform(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    if half > 0.0 {
        rng.random_range(-half..half)
    } else {
        0.0
    }
}
