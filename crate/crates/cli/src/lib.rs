//! Scenario runner for hybrid Koopman simulations.

pub mod config;
pub mod run;
pub mod schema;

pub use config::{ConfigErrors, FieldError, ScenarioConfig};
pub use run::{load, run_scenario, write_outputs, ChecksReport, CliError, RunOutput, Scenario, TimeSeries};
pub use schema::{config_schema, preset_catalog};
