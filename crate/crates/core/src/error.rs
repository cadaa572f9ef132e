use thiserror::Error;

use crate::invariants::GradedCommutant;

/// Coarse error classes; each maps to a distinct CLI exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Validation,
    Resource,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Resource => 4,
            ErrorKind::Internal => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown generator `{name}` at {line}:{col}")]
    UnknownGenerator { name: String, line: usize, col: usize },
    #[error("unknown builtin chain `{0}` (expected one of elliott, seniority, supermultiplet, surfon)")]
    UnknownChain(String),
    #[error("subalgebra not closed: {{{left}, {right}}} has a term in `{outside}`")]
    SubalgebraNotClosed { left: String, right: String, outside: String },
    #[error("invalid subalgebra: {0}")]
    InvalidSubalgebra(String),
    #[error("Jacobi identity fails on {} triple(s), first ({}, {}, {})", .triples.len(), .triples[0].0, .triples[0].1, .triples[0].2)]
    Jacobi { triples: Vec<(String, String, String)> },
    #[error("monomial budget exceeded at degree {degree}: {required} columns > budget {budget}")]
    Resource { degree: u32, required: u128, budget: usize },
    #[error("exponent of `x{var}` exceeds 255")]
    ExponentOverflow { var: usize },
    #[error("degree must be at least 1, got {0}")]
    InvalidDegree(u32),
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },
    #[error("point has {found} coordinates, algebra has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("zero polynomial has no grading")]
    ZeroPolynomial,
    #[error("label count `{formula}` is not a non-negative integer")]
    Parity { formula: &'static str },
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("sweep failed at degree {degree}: {source}")]
    PartialSweep {
        degree: u32,
        #[source]
        source: Box<Error>,
        partial: Box<GradedCommutant>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. } | Error::UnknownGenerator { .. } | Error::UnknownChain(_) | Error::Usage(_) => {
                ErrorKind::Parse
            }
            Error::SubalgebraNotClosed { .. } | Error::InvalidSubalgebra(_) | Error::Jacobi { .. } => {
                ErrorKind::Validation
            }
            Error::Resource { .. } | Error::ExponentOverflow { .. } => ErrorKind::Resource,
            Error::DegreeMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::ZeroPolynomial
            | Error::InvalidDegree(_)
            | Error::Parity { .. }
            | Error::UnknownLabel(_)
            | Error::InvalidGenerator(_)
            | Error::MissingInput(_) => ErrorKind::Validation,
            Error::PartialSweep { source, .. } => source.kind(),
            Error::Io { .. } | Error::Internal(_) => ErrorKind::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
