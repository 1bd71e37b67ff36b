use thiserror::Error;

use crate::halfint::HalfInt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: operator is {found}x{found}, representation needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("triangle rule violated for (J, K, M) = ({j}, {k}, {m}): need |K-J| <= M <= K+J with J+K-M integer")]
    TriangleRule { j: HalfInt, k: HalfInt, m: HalfInt },

    #[error("magnetic index {i} out of range for spin {j}")]
    IndexOutOfRange { j: HalfInt, i: HalfInt },

    #[error("{0} is not a unit vector")]
    NotUnitVector(String),

    #[error("Schatten/L^p exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("quadrature grid of exact degree {have} is insufficient, need {need}")]
    InsufficientGrid { need: usize, have: usize },

    #[error("channel weights invalid: {0}")]
    InvalidWeights(String),

    #[error("optimizer did not converge after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
