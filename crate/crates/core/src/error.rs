use thiserror::Error;

use crate::laws::LawError;
use crate::mesh::MeshError;
use crate::tents::PitchError;

/// Failures raised while advancing a solution through tents.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("law evaluation failed in tent {tent} (element {element}): {source}")]
    Law {
        tent: usize,
        element: usize,
        #[source]
        source: LawError,
    },
    #[error("stage matrix is singular in tent {tent}; tent is too tall for the causality bound")]
    SingularStageMatrix { tent: usize },
    #[error("non-finite state in tent {tent} after substep {substep}")]
    NonFiniteState { tent: usize, substep: usize },
    #[error("singular weighted mass block on element {element}")]
    SingularMass { element: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Pitch(#[from] PitchError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("slab {slab}, layer {layer}: {source}")]
    Solve {
        slab: usize,
        layer: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid field: {0}")]
    Field(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
