use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("node {index} is isolated (degree 0)")]
    IsolatedNode { index: usize },

    #[error("structural violation: {0}")]
    Structure(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {value} at ({row}, {col}) is outside [0, 1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },

    #[error("requested K = {k} exceeds the number of nodes n = {n}")]
    TooManyCommunities { k: usize, n: usize },

    #[error("exact inverse refused for n = {n} > {limit}; use the truncated-series variant")]
    TooLargeForExact { n: usize, limit: usize },

    #[error("non-finite value produced while {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("cluster centers collapsed (separation {separation:e}); try a smaller K")]
    CenterCollapse { separation: f64 },

    #[error("center Gram matrix is singular or ill-conditioned (condition number {condition:e})")]
    SingularCenters { condition: f64 },
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::EigenNonConvergence
                | Error::CenterCollapse { .. }
                | Error::SingularCenters { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
