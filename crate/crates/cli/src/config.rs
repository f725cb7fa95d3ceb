//! Layered run configuration: built-in defaults, then a JSON config file,
//! then `--set key=value` pairs, then dedicated flags.

use std::path::Path;

use hrrpgraphnet::model::ModelConfig;
use hrrpgraphnet::trainkit::TrainConfig;
use hrrpgraphnet::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Recursively overlays `top` onto `base`; objects merge key by key, any
/// other value replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `model.d_out=8` becomes `{"model": {"d_out": 8}}`. Values are read as
/// JSON when they parse and as plain strings otherwise.
fn parse_set(pair: &str) -> Result<Value> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("--set '{pair}': expected KEY=VALUE")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Usage(format!("--set '{pair}': empty key segment")));
    }
    let mut value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    for part in key.rsplit('.') {
        let mut obj = Map::new();
        obj.insert(part.to_string(), value);
        value = Value::Object(obj);
    }
    Ok(value)
}

pub struct Layers {
    value: Value,
}

impl Layers {
    pub fn new(config_file: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if !file.is_object() {
                return Err(Error::Config(format!("{}: expected a JSON object", path.display())));
            }
            merge(&mut value, file);
        }
        for pair in sets {
            merge(&mut value, parse_set(pair)?);
        }
        Ok(Self { value })
    }

    /// Applies a dedicated flag when it was given.
    pub fn flag<T: Serialize>(&mut self, section: &str, key: &str, v: Option<T>) -> Result<()> {
        if let Some(v) = v {
            let mut inner = Map::new();
            inner.insert(key.to_string(), serde_json::to_value(v)?);
            let mut outer = Map::new();
            outer.insert(section.to_string(), Value::Object(inner));
            merge(&mut self.value, Value::Object(outer));
        }
        Ok(())
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_value(self.value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.train.validate()?;
        Ok(cfg)
    }
}
