//! Sweep configuration, orchestration and report output.

mod config;
mod report;
mod run;

use std::path::PathBuf;

pub use config::{ExperimentConfig, FamilySpec, NRange, OutputFormat, OutputSpec, Threads};
pub use report::{Deviation, PredictionEntry, PredictionReport, ReportRow, CSV_COLUMNS};
pub use run::{compute_row, run_experiment, run_sweep};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error{}{}: {message}", field.as_ref().map(|f| format!(" in field `{f}`")).unwrap_or_default(), line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        field: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("report encoding: {0}")]
    Encode(String),

    #[error("worker pool: {0}")]
    Pool(String),
}
