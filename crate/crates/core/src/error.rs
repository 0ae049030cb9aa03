use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be finite and in range, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("row {row}: y = {y} violates the truncation rule y > c = {c}")]
    TruncationViolation { row: usize, y: f64, c: f64 },

    #[error("row {row}: y = {y} lies below the censoring point c = {c}")]
    BelowCensoringPoint { row: usize, y: f64, c: f64 },

    #[error("row {row}: censoring flag inconsistent with y = {y}, c = {c}")]
    InconsistentCensoring { row: usize, y: f64, c: f64 },

    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("regressor cross-product matrix is singular (min eigenvalue {min_eig:e})")]
    Collinearity { min_eig: f64 },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error(
        "nonsingularity violated: minimum eigenvalue {min_eig:e} below threshold {threshold:e}"
    )]
    Singular { min_eig: f64, threshold: f64 },

    #[error("pathological data-generating process: {0}")]
    PathologicalDgp(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}
