use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::layers::{
    AttentionParams, BatchNormParams, Conv1dParams, DenseParams, GraphConvParams, Param,
};
use crate::numerics::Matrix;

/// Names every trainable tensor of the network, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TensorId {
    Conv1Kernels,
    Conv1Bias,
    Bn1Gamma,
    Bn1Beta,
    Conv2Kernels,
    Conv2Bias,
    Bn2Gamma,
    Bn2Beta,
    GraphW1,
    GraphW2,
    GraphBias,
    AttWeight,
    AttBias,
    FcWeight,
    FcBias,
}

impl TensorId {
    pub const ALL: [TensorId; 15] = [
        TensorId::Conv1Kernels,
        TensorId::Conv1Bias,
        TensorId::Bn1Gamma,
        TensorId::Bn1Beta,
        TensorId::Conv2Kernels,
        TensorId::Conv2Bias,
        TensorId::Bn2Gamma,
        TensorId::Bn2Beta,
        TensorId::GraphW1,
        TensorId::GraphW2,
        TensorId::GraphBias,
        TensorId::AttWeight,
        TensorId::AttBias,
        TensorId::FcWeight,
        TensorId::FcBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TensorId::Conv1Kernels => "conv1.kernels",
            TensorId::Conv1Bias => "conv1.bias",
            TensorId::Bn1Gamma => "bn1.gamma",
            TensorId::Bn1Beta => "bn1.beta",
            TensorId::Conv2Kernels => "conv2.kernels",
            TensorId::Conv2Bias => "conv2.bias",
            TensorId::Bn2Gamma => "bn2.gamma",
            TensorId::Bn2Beta => "bn2.beta",
            TensorId::GraphW1 => "gconv.w1",
            TensorId::GraphW2 => "gconv.w2",
            TensorId::GraphBias => "gconv.bias",
            TensorId::AttWeight => "att.weight",
            TensorId::AttBias => "att.bias",
            TensorId::FcWeight => "fc.weight",
            TensorId::FcBias => "fc.bias",
        }
    }

    pub fn from_name(name: &str) -> Option<TensorId> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Biases and BN shifts start at 0, BN scales at 1; everything else is
    /// drawn uniformly.
    fn is_weight(self) -> bool {
        matches!(
            self,
            TensorId::Conv1Kernels
                | TensorId::Conv2Kernels
                | TensorId::GraphW1
                | TensorId::GraphW2
                | TensorId::AttWeight
                | TensorId::FcWeight
        )
    }

    /// Which ablation module a tensor belongs to; the dense head is always on.
    pub fn enabled_in(self, config: &ModelConfig) -> bool {
        use TensorId::*;
        match self {
            Conv1Kernels | Conv1Bias | Bn1Gamma | Bn1Beta | Conv2Kernels | Conv2Bias | Bn2Gamma | Bn2Beta => {
                config.ablation.local_conv
            }
            GraphW1 | GraphW2 | GraphBias => config.ablation.graph_conv,
            AttWeight | AttBias => config.ablation.attention,
            FcWeight | FcBias => true,
        }
    }
}

/// Every trainable tensor of the network plus batch-norm running statistics.
///
/// All modules are always allocated; under an ablation the disabled ones
/// simply sit off the compute path and keep zero gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub conv1: Conv1dParams,
    pub bn1: BatchNormParams,
    pub conv2: Conv1dParams,
    pub bn2: BatchNormParams,
    pub gconv: GraphConvParams,
    pub att: AttentionParams,
    pub fc: DenseParams,
}

impl ModelParams {
    /// All-zero weights with the shapes `config` implies (BN scale 1).
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_out;
        Ok(Self {
            conv1: Conv1dParams::zeros(1, d),
            bn1: BatchNormParams::new(d, config.bn_eps, config.bn_momentum)?,
            conv2: Conv1dParams::zeros(d, d),
            bn2: BatchNormParams::new(d, config.bn_eps, config.bn_momentum)?,
            gconv: GraphConvParams::zeros(config.graph_in_dim(), config.g_out, config.n_cells, config.graph_bias),
            att: AttentionParams::zeros(config.feature_dim()),
            fc: DenseParams::zeros(config.feature_dim(), config.classes),
        })
    }

    /// Weights ~ U(−√(1/fan_in), +√(1/fan_in)), biases 0, BN γ = 1, β = 0,
    /// running stats (0, 1). Deterministic in `config.seed`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for id in TensorId::ALL {
            if !id.is_weight() {
                continue;
            }
            let p = params.param_mut(id);
            let fan_in = p.value.cols();
            let bound = (1.0 / fan_in as f64).sqrt();
            for v in p.value.as_mut_slice() {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(params)
    }

    pub fn param(&self, id: TensorId) -> &Param {
        use TensorId::*;
        match id {
            Conv1Kernels => &self.conv1.kernels,
            Conv1Bias => &self.conv1.bias,
            Bn1Gamma => &self.bn1.gamma,
            Bn1Beta => &self.bn1.beta,
            Conv2Kernels => &self.conv2.kernels,
            Conv2Bias => &self.conv2.bias,
            Bn2Gamma => &self.bn2.gamma,
            Bn2Beta => &self.bn2.beta,
            GraphW1 => &self.gconv.w1,
            GraphW2 => &self.gconv.w2,
            GraphBias => &self.gconv.bias,
            AttWeight => &self.att.weight,
            AttBias => &self.att.bias,
            FcWeight => &self.fc.weight,
            FcBias => &self.fc.bias,
        }
    }

    pub fn param_mut(&mut self, id: TensorId) -> &mut Param {
        use TensorId::*;
        match id {
            Conv1Kernels => &mut self.conv1.kernels,
            Conv1Bias => &mut self.conv1.bias,
            Bn1Gamma => &mut self.bn1.gamma,
            Bn1Beta => &mut self.bn1.beta,
            Conv2Kernels => &mut self.conv2.kernels,
            Conv2Bias => &mut self.conv2.bias,
            Bn2Gamma => &mut self.bn2.gamma,
            Bn2Beta => &mut self.bn2.beta,
            GraphW1 => &mut self.gconv.w1,
            GraphW2 => &mut self.gconv.w2,
            GraphBias => &mut self.gconv.bias,
            AttWeight => &mut self.att.weight,
            AttBias => &mut self.att.bias,
            FcWeight => &mut self.fc.weight,
            FcBias => &mut self.fc.bias,
        }
    }

    pub fn zero_grads(&mut self) {
        for id in TensorId::ALL {
            self.param_mut(id).zero_grad();
        }
    }

    pub fn parameter_count(&self) -> usize {
        TensorId::ALL.iter().map(|&id| self.param(id).value.len()).sum()
    }

    /// Checks every tensor against the shapes `config` implies; the error
    /// names the tensor and both shapes.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = Self::zeros(config)?;
        for id in TensorId::ALL {
            let (want, got) = (expected.param(id).shape(), self.param(id).shape());
            if want != got {
                return Err(Error::Config(format!(
                    "{}: config implies shape {want:?}, found {got:?}",
                    id.name()
                )));
            }
        }
        if self.gconv.bias_mode != config.graph_bias {
            return Err(Error::Config(format!(
                "gconv.bias: config says {:?}, parameters are {:?}",
                config.graph_bias, self.gconv.bias_mode
            )));
        }
        for (name, bn) in [("bn1", &self.bn1), ("bn2", &self.bn2)] {
            if bn.running_mean.len() != config.d_out || bn.running_var.len() != config.d_out {
                return Err(Error::Config(format!("{name}: running statistics do not match d_out")));
            }
        }
        Ok(())
    }
}

/// Gradient buffers for every tensor, indexed by [`TensorId`].
#[derive(Clone, Debug)]
pub(crate) struct GradBuffer(pub Vec<Matrix>);

impl GradBuffer {
    pub fn zeros_like(params: &ModelParams) -> Self {
        GradBuffer(
            TensorId::ALL
                .iter()
                .map(|&id| {
                    let (r, c) = params.param(id).shape();
                    Matrix::zeros(r, c)
                })
                .collect(),
        )
    }

    pub fn add(&mut self, id: TensorId, g: &Matrix) -> Result<()> {
        self.0[id.index()].add_assign(g)
    }

    pub fn merge(&mut self, other: &GradBuffer) -> Result<()> {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}
