use std::path::PathBuf;

use thiserror::Error;

/// Connected components of the in-service network, as 1-based bus ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IslandPartition {
    pub islands: Vec<Vec<usize>>,
}

impl IslandPartition {
    /// Index of the island that contains `bus` (1-based id).
    pub fn island_of(&self, bus: usize) -> Option<usize> {
        self.islands.iter().position(|isl| isl.contains(&bus))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid case: {0}")]
    Validation(String),

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },

    #[error("network is islanded into {} components", .0.islands.len())]
    Islanded(IslandPartition),

    #[error("injection vector is unbalanced: sum = {sum:.6e} MW (tolerance {tol:.3e})")]
    Unbalanced { sum: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("correlation matrix is not positive semidefinite")]
    NotPsd,

    #[error("invalid wind model: {0}")]
    WindModel(String),

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("dispatch problem is infeasible")]
    Infeasible,

    #[error("dispatch problem is unbounded: {0}")]
    Unbounded(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mismatched workloads: {0}")]
    Workload(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
