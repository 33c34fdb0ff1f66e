//! Experiment harness for `ssmd-core`: configuration files, seeded
//! Monte-Carlo runs of the utility benchmark, CSV summaries and the
//! schedule verification report.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_sweep, McSummary};
pub use output::emit_csv;
pub use verify::{verify_suite, VerifyReport};
