//! Scenario runner behind the `cosym` binary: config parsing, check
//! orchestration and canonical JSON and CSV output.

pub mod config;
pub mod explain;
pub mod report;
pub mod runner;

pub use config::{parse_config, CheckName, ConfigError, FoliationChoice, RunConfig, Tolerances};
pub use report::{CheckReport, ScenarioReport, Status};
pub use runner::{run, write_morse_csv, RunOutput};
