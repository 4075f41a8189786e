//! Experiment orchestration: configuration, grid execution, CSV output,
//! summary tables and real-data ingestion.

mod config;
mod csvio;
mod dataset;
mod grid;
mod report;

pub use config::{ExperimentConfig, Mode, ModelEntry};
pub use csvio::{csv_string, emit_csv, parse_csv, write_csv, ResultRow, HEADER};
pub use dataset::{load_dataset_csv, parse_dataset};
pub use grid::{build_model, cells, run_grid, theory_for, Cell};
pub use report::report_summary;
