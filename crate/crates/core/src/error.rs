use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The inputs are malformed or violate a contract.
    Validation,
    /// The inputs were well formed but the computation could not complete.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} outside supported range 1..=64")]
    UnsupportedDimension(usize),

    #[error("matrix is not Hermitian (max |A - A^dag| entry = {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix function undefined at eigenvalue {eigenvalue:.3e}")]
    FunctionDomain { eigenvalue: f64 },

    #[error("trace {trace} deviates from 1 by more than 1e-10")]
    Trace { trace: f64 },

    #[error("state is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Kraus operators are not complete: max |sum M^dag M - I| entry = {deviation:.3e}")]
    KrausIncomplete { deviation: f64 },

    #[error("normalization violated: {what} deviates from 1 by {deviation:.3e}")]
    Normalization { what: &'static str, deviation: f64 },

    #[error("expression error: {0}")]
    Expr(#[from] ExprError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("family kind mismatch: operation requires {expected}, family is {got}")]
    KindMismatch { expected: &'static str, got: &'static str },

    #[error("state has no support above rank tolerance {rank_tol:.1e}")]
    DegenerateSupport { rank_tol: f64 },

    #[error("state is singular (min eigenvalue {min_eigenvalue:.3e}); use the eigenbasis SLD for rank-deficient states")]
    SingularState { min_eigenvalue: f64 },

    #[error("spectrum is degenerate (min eigen-gap {gap:.3e}); classical/quantum split is ill-defined")]
    DegenerateSpectrum { gap: f64 },

    #[error("decomposed QFI {decomposed} disagrees with direct QFI {direct}")]
    DecompositionMismatch { decomposed: f64, direct: f64 },

    #[error("Fisher information vanishes ({0:.3e}); no estimator carries information")]
    NoInformation(f64),

    #[error("all measurement outcomes have probability below 1e-12")]
    NoOutcomes,

    #[error("Fisher matrix is singular (condition number {condition:.3e}); null direction {null_direction:?}")]
    SingularFisher {
        condition: f64,
        null_direction: Vec<f64>,
    },

    #[error("POVM invalid: {0}")]
    InvalidPovm(String),

    #[error("prior invalid: {0}")]
    InvalidPrior(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("likelihood undefined: an observed outcome has zero probability across the search interval")]
    LikelihoodUndefined,

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NotSquare { .. }
            | DimensionMismatch { .. }
            | UnsupportedDimension(_)
            | NotHermitian { .. }
            | NonFinite
            | Trace { .. }
            | NotPositive { .. }
            | KrausIncomplete { .. }
            | Normalization { .. }
            | InvalidArgument(_)
            | KindMismatch { .. }
            | InvalidPovm(_)
            | InvalidPrior(_)
            | Schema { .. }
            | Io { .. } => ErrorClass::Validation,
            Expr(e) if e.is_syntax() => ErrorClass::Validation,
            _ => ErrorClass::Numerical,
        }
    }
}
