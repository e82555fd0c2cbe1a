//! Flat configuration maps, the binary checkpoint container and the metrics
//! CSV formats.

mod checkpoint;
mod config_map;
mod metrics;

pub use checkpoint::{Checkpoint, CheckpointManifest, Dtype, TensorEntry, FORMAT_VERSION, MAGIC};
pub use config_map::{config_from_json, config_to_json, from_config, to_config, ConfigMap, ConfigValue, CELL_KEYS, TRAIN_KEYS};
pub use metrics::{
    export_metrics, format_float, read_run_csv, read_summary_csv, write_run_csv, write_summary_csv, RUN_HEADER,
    SUMMARY_HEADER,
};
