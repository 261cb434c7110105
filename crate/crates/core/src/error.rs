use nkeps_milp::{ModelError, Status};
use thiserror::Error;

use crate::network_model::ValidationReport;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input:\n{0}")]
    Invalid(ValidationReport),

    #[error("{0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown element id `{0}`")]
    UnknownElement(String),

    #[error("{what} has {count} contingency states, over the limit of {limit}")]
    SizeGuard { what: String, count: u128, limit: u128 },

    #[error("{context}: solver returned {status}")]
    Solver { context: String, status: Status },

    #[error("model construction failed: {0}")]
    Model(#[from] ModelError),

    #[error("dual bound U too small: oracle value {oracle} but PSP at its contingency gives {psp}")]
    Audit { oracle: f64, psp: f64 },

    #[error("bad dual: cut value {lhs} at the spawning plan differs from loss of load {z}")]
    BadDual { lhs: f64, z: f64 },

    #[error("cut loop stalled: {0}")]
    Stall(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
