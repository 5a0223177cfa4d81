//! Data ingestion, run configuration, command dispatch and artifact output.

mod commands;
mod config;
mod data;
mod report;

pub use commands::{default_truth, run_command, Command};
pub use config::{
    hex_digest, BacktestSettings, DataConfig, DecomposeSettings, DiagnoseSettings, FitSettings, KernelKind, ModelConfig,
    ParamOverrides, RunConfig, SimFeatures, SimulateSettings, WhittleSettings, PARAM_KEYS,
};
pub use data::{load_series, read_series, LoadOptions};
pub use report::{fmt_num, fmt_short, text_table, ArtifactEntry, ArtifactWriter, Envelope, Manifest, Versions, MANIFEST_FILE};
