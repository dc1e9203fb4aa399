//! Experiment harness: configuration loading, the experiment pipelines and
//! deterministic CSV/JSON persistence.

pub mod config;
pub mod output;
pub mod patterns;
pub mod pipeline;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config schema error: {0}")]
    Schema(String),
    #[error("infeasible bound: the selected assembly evaluates to infinity")]
    InfeasibleBound,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pattern file error: {0}")]
    PatternFile(String),
    #[error(transparent)]
    Geometry(#[from] steinpp::geometry::GeometryError),
    #[error(transparent)]
    Metrics(#[from] steinpp::metrics::MetricsError),
    #[error(transparent)]
    Model(#[from] steinpp::models::ModelError),
    #[error(transparent)]
    Bound(#[from] steinpp::bounds::BoundError),
    #[error(transparent)]
    Density(#[from] steinpp::density::DensityError),
    #[error(transparent)]
    Lrd(#[from] steinpp::lrdtest::LrdError),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code contract: 2 for schema errors, 3 for an infeasible
    /// bound in a single-shot call, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Schema(_) => 2,
            HarnessError::InfeasibleBound => 3,
            _ => 1,
        }
    }
}
