//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by estimators, samplers, and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (sizes, ranges, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The sample is too degenerate to estimate from (e.g. all spacings zero,
    /// every row skipped).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Neighbor geometry collapsed (zero distance after de-duplication).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A query point lies outside the training bounding box.
    #[error("point outside the grid bounding box on axis {axis}: {value} not in [{min}, {max}]")]
    OutOfRange {
        axis: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A correlation matrix failed validation (asymmetry, non-unit diagonal,
    /// failed Cholesky factorization).
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    /// The sample covariance is numerically rank deficient.
    #[error(
        "degenerate covariance: eigenvalue {eigenvalue:e} below relative threshold {threshold:e}"
    )]
    DegenerateCovariance { eigenvalue: f64, threshold: f64 },

    /// Labels unusable for class-conditional estimation.
    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    /// No cross-validation candidate produced a feasible loss.
    #[error("selection failed: {0}")]
    Selection(String),

    /// A cell of a delimited table failed to parse. Row and column are
    /// 1-based file coordinates.
    #[error("parse error at row {row} col {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for CLI reporting: 2 for input/parse errors, 3 for
    /// degenerate-data errors, 4 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::DegenerateSample(_)
            | Error::DegenerateGeometry(_)
            | Error::DegenerateCovariance { .. }
            | Error::OutOfRange { .. } => 3,
            Error::InvalidInput(_)
            | Error::InvalidCorrelation(_)
            | Error::InvalidLabels(_)
            | Error::Selection(_) => 4,
        }
    }
}
