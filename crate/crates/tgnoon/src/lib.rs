//! Experiment runner for the `tgnoon-core` numerics: configuration,
//! CSV artifacts and run manifests.

pub mod config;
pub mod experiments;
pub mod output;

use std::io;

pub use config::{resolve, Experiment, ExperimentConfig, Overrides};
pub use experiments::run_experiment;
pub use output::{write_run, Artifact};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(tgnoon_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl From<tgnoon_core::Error> for RunError {
    fn from(e: tgnoon_core::Error) -> Self {
        use tgnoon_core::Error as E;
        match e {
            // rejected parameter values are configuration problems
            E::InvalidParameter(_)
            | E::InvalidGrid(_)
            | E::EvenParticleNumber(_)
            | E::TooManyParticles { .. } => RunError::Config(e.to_string()),
            other => RunError::Numerical(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}
