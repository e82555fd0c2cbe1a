//! Truncated BPTT with Adam, evaluation and repeated-seed summaries.

mod adam;
mod config;
mod loss;
mod run;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use config::{TestWeights, TrainConfig};
pub use loss::{loss_value, metric, sequence_loss, MetricAccumulator};
pub use run::{
    cell_config_for, evaluate, mean_std, repeat_runs, run, summarize, train_batch, train_epoch, EpochRecord,
    RepeatOutcome, RunOutcome, RunRecord, SummaryRow, SAMPLE_DT,
};
