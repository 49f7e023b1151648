//! Experiment configuration, sweeps, persistence and reports for `rlab`.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use report::{emit_report, load_record};
pub use run::{run_experiment, RunRecord, Summary, TrialCertificate};
