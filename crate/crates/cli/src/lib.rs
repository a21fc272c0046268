//! Scenario-driven batch runner for the `geodequiv` checks.

pub mod registry;
pub mod report;
pub mod runner;
pub mod scenario;

pub use registry::{lookup, CheckInfo, TargetKind, CHECKS, CHECK_COUNT};
pub use report::{Record, Report};
pub use runner::{run_scenario, Overrides};
pub use scenario::{Mode, Scenario};

/// A scenario or flag problem; the binary exits with status 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

/// Directory holding the bundled scenarios.
pub fn scenario_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
