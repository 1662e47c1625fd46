//! Seeded experiment runner over the matching scenarios.

pub mod config;
pub mod error;
pub mod runner;
pub mod table;

pub use config::{ExperimentConfig, Format, Method, ScenarioKind, Seeds};
pub use error::{HarnessError, Result};
pub use runner::{emit, run_experiment};
pub use table::{MetricRow, MetricTable};
