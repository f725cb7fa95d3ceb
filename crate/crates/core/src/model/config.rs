use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{GraphBias, BN_DEFAULT_EPS, BN_DEFAULT_MOMENTUM};

/// Which of the three feature modules are active: local convolution (a),
/// graph convolution (b), attention pooling (c).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AblationConfig {
    pub local_conv: bool,
    pub graph_conv: bool,
    pub attention: bool,
}

impl AblationConfig {
    pub const FULL: AblationConfig = AblationConfig::new(true, true, true);

    /// The seven legal configurations, numbered 1–7 in this order:
    /// a, b, c, ab, ac, bc, abc.
    pub const TABLE_ROWS: [AblationConfig; 7] = [
        AblationConfig::new(true, false, false),
        AblationConfig::new(false, true, false),
        AblationConfig::new(false, false, true),
        AblationConfig::new(true, true, false),
        AblationConfig::new(true, false, true),
        AblationConfig::new(false, true, true),
        AblationConfig::new(true, true, true),
    ];

    pub const fn new(local_conv: bool, graph_conv: bool, attention: bool) -> Self {
        Self {
            local_conv,
            graph_conv,
            attention,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.local_conv || self.graph_conv || self.attention) {
            return Err(Error::Config("ablation must enable at least one of a, b, c".into()));
        }
        Ok(())
    }

    /// Position (1-based) in [`AblationConfig::TABLE_ROWS`].
    pub fn table_number(&self) -> Option<usize> {
        Self::TABLE_ROWS.iter().position(|r| r == self).map(|i| i + 1)
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.local_conv {
            s.push('a');
        }
        if self.graph_conv {
            s.push('b');
        }
        if self.attention {
            s.push('c');
        }
        s
    }
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self::FULL
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for AblationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = AblationConfig::new(false, false, false);
        for ch in s.chars() {
            let flag = match ch {
                'a' => &mut cfg.local_conv,
                'b' => &mut cfg.graph_conv,
                'c' => &mut cfg.attention,
                _ => return Err(Error::Config(format!("ablation '{s}': unknown module '{ch}', expected a subset of \"abc\""))),
            };
            if *flag {
                return Err(Error::Config(format!("ablation '{s}': module '{ch}' repeated")));
            }
            *flag = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl TryFrom<String> for AblationConfig {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AblationConfig> for String {
    fn from(a: AblationConfig) -> String {
        a.label()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Range cells per profile (N).
    pub n_cells: usize,
    /// Output channels of both convolution blocks.
    pub d_out: usize,
    /// Output channels of the graph convolution.
    pub g_out: usize,
    pub classes: usize,
    pub leaky_slope: f64,
    pub bn_eps: f64,
    pub bn_momentum: f64,
    pub ablation: AblationConfig,
    pub graph_bias: GraphBias,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_cells: 501,
            d_out: 16,
            g_out: 32,
            classes: 3,
            leaky_slope: 0.01,
            bn_eps: BN_DEFAULT_EPS,
            bn_momentum: BN_DEFAULT_MOMENTUM,
            ablation: AblationConfig::FULL,
            graph_bias: GraphBias::PerNode,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 3 {
            return Err(Error::Config(format!("n_cells must be >= 3, got {}", self.n_cells)));
        }
        for (name, v) in [("d_out", self.d_out), ("g_out", self.g_out), ("classes", self.classes)] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!("leaky_slope must be in (0, 1), got {}", self.leaky_slope)));
        }
        if self.bn_eps.is_nan() || self.bn_eps <= 0.0 {
            return Err(Error::Config(format!("bn_eps must be > 0, got {}", self.bn_eps)));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) {
            return Err(Error::Config(format!("bn_momentum must be in (0, 1), got {}", self.bn_momentum)));
        }
        self.ablation.validate()
    }

    /// Channels entering the graph stage (and the pooling stage when the
    /// graph convolution is off).
    pub fn graph_in_dim(&self) -> usize {
        if self.ablation.local_conv {
            self.d_out
        } else {
            1
        }
    }

    /// Channels of the node features that get pooled.
    pub fn feature_dim(&self) -> usize {
        if self.ablation.graph_conv {
            self.g_out
        } else {
            self.graph_in_dim()
        }
    }
}
