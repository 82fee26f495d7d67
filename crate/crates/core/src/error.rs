use thiserror::Error;

use crate::geom::HPolytope;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty set")]
    EmptySet,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unbounded set: {0}")]
    Unbounded(String),

    #[error("LP backend failure: {0}")]
    Lp(String),

    #[error("QP solver failure: {0}")]
    Solver(String),

    #[error("matrix is rank deficient (no redundant actuators allowed)")]
    RankDeficient,

    #[error("not stabilizable: Riccati iteration did not converge in {iterations} iterations")]
    NotStabilizable { iterations: usize },

    #[error("robust invariant set iteration did not converge within {iterations} iterations")]
    RpiNotConverged {
        iterations: usize,
        last: Box<HPolytope>,
    },

    #[error("noise model violated: feasible parameter set of row {row} became empty at observation {step}")]
    NoiseModelViolated { row: usize, step: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }
}
