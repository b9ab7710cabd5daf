//! Scenario runner for `lfvlab-core`.
//!
//! A scenario file names an experiment and the models it needs. Running it
//! produces a JSON [`manifest::ResultManifest`] and one CSV per result table.

pub mod error;
pub mod experiment;
pub mod manifest;
pub mod scenario;

pub use error::{OutputError, RunError, ScenarioError};
pub use experiment::run_experiment;
pub use manifest::{compare_manifests, emit_csv, ResultManifest};
pub use scenario::{parse_scenario, Scenario};
