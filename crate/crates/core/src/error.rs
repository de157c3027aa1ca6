use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix data has {got} entries, expected {rows}x{cols} = {}", rows * cols)]
    EntryCount { rows: usize, cols: usize, got: usize },

    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error(
        "dimension mismatch in {context}: `{argument}` is {}x{}, expected {}x{}",
        found.0, found.1, expected.0, expected.1
    )]
    DimensionMismatch {
        context: &'static str,
        argument: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    #[error("zero curvature: multitask design is rank deficient (sigma_min = {sigma_min:e})")]
    ZeroCurvature { sigma_min: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("support index {index:?} out of range for a {rows}x{cols} matrix")]
    SupportOutOfRange {
        index: (usize, usize),
        rows: usize,
        cols: usize,
    },

    #[error("support kind does not match regularizer `{0}`")]
    SupportKindMismatch(&'static str),

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error(
        "the two-step estimator is only valid for the identity observation operator; \
         under a general operator such as I + e1 1^T / sqrt(d) thresholding Y leaks \
         the low-rank component into the sparse estimate"
    )]
    TwoStepRequiresIdentity,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
