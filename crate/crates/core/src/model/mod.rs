//! Network assembly, loss, prediction, ablation wiring and checkpoints.

mod checkpoint;
mod config;
pub mod gradcheck;
mod network;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use config::{AblationConfig, ModelConfig};
pub use network::{batch_loss, loss, ForwardCache, HrrpGraphNet};
pub use params::{ModelParams, TensorId};
