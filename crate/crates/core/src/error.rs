use thiserror::Error;

/// Errors produced across the screening, fitting and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {what}")]
    Degenerate { what: String },

    #[error("column {column} has zero sample variance")]
    ZeroVariance { column: usize },

    #[error("pair ({i}, {j}) is collinear; the two-predictor fit is singular")]
    SingularPair { i: usize, j: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("spearman threshold saturated (s* = {s_star:.6} >= 1) for n = {n}, p = {p}, alpha = {alpha}")]
    ThresholdSaturated {
        s_star: f64,
        n: usize,
        p: usize,
        alpha: f64,
    },

    #[error("covariance construction `{construction}` is not positive definite")]
    NotPositiveDefinite { construction: String },

    #[error("every grid fit failed to converge ({fits} fits)")]
    TuningFailed {
        fits: usize,
        scores: Vec<crate::tuning::ScoreRow>,
    },

    #[error("csv error at row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
