//! File formats, scenario configuration and the end-to-end pipeline.

pub mod config;
pub mod demand;
pub mod gps;
pub mod pipeline;
pub mod report;

pub use config::ScenarioConfig;
pub use pipeline::{run_scenario, RunReport};
pub use report::emit_report;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FleetError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
}

impl FleetError {
    pub fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        FleetError::Stage {
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }

    /// Machine-readable form printed by the CLI on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let body = match self {
            FleetError::Io(m) => json!({ "kind": "io", "message": m }),
            FleetError::Parse {
                file,
                line,
                message,
            } => json!({ "kind": "parse", "file": file, "line": line, "message": message }),
            FleetError::Config(m) => json!({ "kind": "config", "message": m }),
            FleetError::Stage { stage, message } => {
                json!({ "kind": "stage", "stage": stage, "message": message })
            }
        };
        json!({ "error": body })
    }
}
