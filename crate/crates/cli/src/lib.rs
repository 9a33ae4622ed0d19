//! Scenario runner, acceptance front end and plotting for `geoflow`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod scenario;
pub mod verify;

pub use config::{Kind, ScenarioConfig, OUT_ENV};
pub use error::CliError;
pub use scenario::{run_scenario, RunReport};
