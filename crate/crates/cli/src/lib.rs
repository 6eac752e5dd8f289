//! Driver for the `opdomain` command: configuration, execution and
//! reporting.

pub mod config;
pub mod examples;
pub mod report;
pub mod run;

pub use config::{ConfigError, JobConfig, JobKind};
pub use report::{Report, Stage};
pub use run::{run, Outcome};
