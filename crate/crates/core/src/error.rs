use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("moment table is not Hermitian (defect {defect:e})")]
    NonHermitian { defect: f64 },

    #[error("moment table is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("moment tables have different degrees ({left} vs {right})")]
    DegreeMismatch { left: usize, right: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("operation needs moments up to degree {required}, table has degree {available}")]
    DegreeTooHigh { required: usize, available: usize },

    #[error("Gram matrix numerically singular at degree {at_degree}")]
    NumericallySingular { at_degree: usize },

    #[error("Christoffel-Darboux kernel vanishes at the evaluation point")]
    DegenerateEvaluation,

    #[error("Hessenberg matrix has {available} columns, {required} needed")]
    InsufficientColumns { required: usize, available: usize },

    #[error("support sample set is empty")]
    EmptySampleSet,

    #[error("b-matrix is not rank deficient (smallest/largest singular value {ratio:e})")]
    RankTestFailed { ratio: f64 },

    #[error("null space of the b-matrix is ambiguous: {reason}")]
    IllConditionedNullSpace { reason: String },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericallySingular { .. }
                | Error::RankTestFailed { .. }
                | Error::IllConditionedNullSpace { .. }
                | Error::DegenerateEvaluation
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NotPsd { .. } => "NotPSD",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::Parse { .. } => "ParseError",
            Error::DegreeTooHigh { .. } => "DegreeTooHigh",
            Error::NumericallySingular { .. } => "NumericallySingular",
            Error::DegenerateEvaluation => "DegenerateEvaluation",
            Error::InsufficientColumns { .. } => "InsufficientColumns",
            Error::EmptySampleSet => "EmptySampleSet",
            Error::RankTestFailed { .. } => "RankTestFailed",
            Error::IllConditionedNullSpace { .. } => "IllConditionedNullSpace",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
