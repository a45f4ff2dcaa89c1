//! Batch front end: configuration, execution and export.

pub mod config;
pub mod export;
pub mod gridio;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig, Study, ValidConfig};
pub use export::{export, Report, Table};
pub use gridio::{read_grid_function, write_grid_function};
pub use run::{execute, run, validate, ExitCode, RunOutcome};
