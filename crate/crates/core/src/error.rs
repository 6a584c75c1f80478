//! Error type shared by every operation in the crate.

use thiserror::Error;

/// Errors raised by operator, frame, and bound-propagation computations.
///
/// Numerical predicates always report both the measured quantity and the
/// threshold it was compared against, so failures are reproducible from the
/// message alone.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("operator is not self-adjoint: deviation {deviation:.3e} exceeds {threshold:.3e}")]
    NotSelfAdjoint { deviation: f64, threshold: f64 },

    #[error("operator is not positive: min eigenvalue {min_eigenvalue:.3e} below -{threshold:.3e}")]
    NotPositive { min_eigenvalue: f64, threshold: f64 },

    #[error("operator is not invertible: smallest singular value {singular_value:.3e} at or below {threshold:.3e}")]
    NotInvertible { singular_value: f64, threshold: f64 },

    #[error("operator is not unitary: deviation {deviation:.3e} exceeds {threshold:.3e}")]
    NotUnitary { deviation: f64, threshold: f64 },

    #[error("pencil denominator is numerically zero")]
    ZeroPencil,

    #[error("operator `{name}` is numerically zero")]
    ZeroOperator { name: &'static str },

    #[error("quadratic form is not real: |imaginary part| {imaginary:.3e} exceeds {threshold:.3e}")]
    NonRealForm { imaginary: f64, threshold: f64 },

    #[error("block {index} is not a positive operator: deviation {deviation:.3e} exceeds {threshold:.3e}")]
    NotPositiveBlock {
        index: usize,
        deviation: f64,
        threshold: f64,
    },

    #[error("system is not a frame: optimal lower bound {lower:.3e}")]
    NotAFrame { lower: f64 },

    #[error("restricted map is singular: smallest singular value {singular_value:.3e} at or below {threshold:.3e}")]
    SingularRestriction { singular_value: f64, threshold: f64 },

    #[error("range containment fails: residual {deviation:.3e} exceeds {threshold:.3e}")]
    RangeNotContained { deviation: f64, threshold: f64 },

    #[error("ranges are not orthogonal: overlap {overlap:.3e} exceeds {threshold:.3e}")]
    RangesNotOrthogonal { overlap: f64, threshold: f64 },

    #[error("hypothesis `{name}` fails with margin {margin:.3e}")]
    HypothesisFailed { name: String, margin: f64 },

    #[error("verification `{name}` fails with margin {margin:.3e}")]
    VerificationFailed { name: String, margin: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
