//! Experiment driver, report writer and self-check suite for `omega-shift`.

pub mod config;
pub mod experiment;
pub mod report;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, WRule};
pub use experiment::{run_experiment, ExperimentError, XReport, THREADS_ENV};
pub use report::ReportRow;
pub use verify::{verify_suite, Level, VerifySummary};
