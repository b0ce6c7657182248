//! Scenario runner for the `dqvi` rigid-body integrator: TOML scenarios in,
//! trajectory tables and run summaries out.

pub mod compare;
pub mod config;
pub mod error;
pub mod trajectory;

pub use compare::{compare, Comparison, Trajectory};
pub use config::{parse_config, IntegratorKind, Overrides, ScenarioConfig};
pub use error::{Result, SimError};
pub use trajectory::{run, run_to_writer, RunSummary, TrajectoryRecord};

use std::path::Path;

/// Reads, parses and applies overrides to a scenario file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let config = parse_config(&text).map_err(|e| match e {
        SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
        e => e,
    })?;
    config.with_overrides(overrides)
}
