use thiserror::Error;

/// Errors produced by the numerical kernels.
///
/// Iterative solvers and integrators report numerical breakdown through
/// their trace status rather than through this type; `Error` is for contract
/// violations (shapes, domains) and for direct computations that cannot
/// produce a result.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite entry at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("domain error in {op} at ({row}, {col}): {reason}")]
    Domain {
        op: &'static str,
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("matrix is singular")]
    Singular,

    #[error("no usable pivot for row {row} after row interchanges")]
    SingularPivot { row: usize },

    #[error("eigenvalue computation failed to converge")]
    EigenFailure,

    #[error("denominator guard tripped: {0}")]
    Guard(&'static str),

    #[error("zero matrix: step size is unrestricted")]
    Unrestricted,

    #[error("expression is not polynomial of degree <= 3: {0}")]
    NonPolynomial(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("degenerate point: {0}")]
    Degenerate(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::Shape {
        op,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
