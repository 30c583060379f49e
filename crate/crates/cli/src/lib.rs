//! Batch driver: read a config, run its tasks, report.

pub mod config;
pub mod report;
pub mod run;
pub mod wire;

pub use config::{parse_config, Config, ConfigError};
pub use report::{emit_report, Format, Report, Status};
pub use run::{run_config, Selection};
