use std::path::PathBuf;

use thiserror::Error;

use crate::relaxation::RelaxationSolution;

#[derive(Debug, Error)]
pub enum ScgError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("relaxation did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        /// Best iterate reached; its dual bound is still valid.
        best: Box<RelaxationSolution>,
    },

    #[error("root node is infeasible: the supplied cuts exclude every support")]
    Infeasible,

    #[error("instance too large for exhaustive enumeration ({required} > budget {budget})")]
    OracleRefusal { required: u128, budget: u128 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ScgError>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScgError::Input(msg.into()))
}
