//! Adam, the training loop, evaluation metrics and the ablation runner.

mod ablation;
mod adam;
mod metrics;
mod train;

pub use ablation::{run_ablation_suite, AblationRow, AblationRun, AblationTable};
pub use adam::{adam_step, adam_update, AdamState, TrainConfig};
pub use metrics::{evaluate, Metrics, MetricsTable};
pub use train::{batches, train, write_epoch_log, EpochRecord, TrainOutcome};
