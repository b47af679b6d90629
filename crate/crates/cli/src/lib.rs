//! Scenario runner for the straightening laboratory: configuration, seeded
//! sweeps, summaries and machine-readable outputs.

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod seeds;
pub mod stats;

pub use config::{Scenario, ScenarioConfig, VertexLaw};
pub use error::{CliError, Result};
pub use scenarios::{run, Report};
