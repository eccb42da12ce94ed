use thiserror::Error;

/// Errors raised by the constructions and solvers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("non-finite entry in matrix or vector")]
    NonFinite,

    #[error("dimension {0} is not a power of two of at least 4")]
    NotQubitDimension(usize),

    #[error("invalid trace: expected 1, got {0}")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("negative entry {value:e} in `{field}`")]
    NegativeEntry { field: &'static str, value: f64 },

    #[error("block {block}: coherence {r} exceeds sqrt(a*b) = {bound}")]
    CoherenceBound { block: usize, r: f64, bound: f64 },

    #[error("purity {purity} outside (1/(n+1), 1] for n = {n}")]
    PurityOutOfRange { purity: f64, n: usize },

    #[error("Kraus operators are not trace preserving (residual {0:e})")]
    NotTracePreserving(f64),

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver failure at log-det iteration {iteration}: {status}")]
    SolverFailure { iteration: usize, status: String },
}

pub type Result<T> = std::result::Result<T, Error>;
