//! Scenario configuration, built-in model systems and the run pipeline
//! behind the `kgres` binary.

pub mod config;
pub mod run;
pub mod scenarios;
pub mod series;

pub use config::{ConfigError, ScenarioConfig};
pub use run::{refit, run_scenario, Manifest, Report, RunError, RunOptions, RunOutcome};
pub use scenarios::{builtin, builtin_scenarios};

use std::path::Path;

/// Loads a TOML file when `source` names an existing path, otherwise looks
/// up a built-in scenario by name.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(source);
    if path.exists() {
        return ScenarioConfig::from_path(path);
    }
    builtin(source).ok_or_else(|| ConfigError::Parse(format!("{source}: no such file or built-in scenario")))
}
