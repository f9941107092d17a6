use std::path::PathBuf;

/// Errors produced by the forecasting toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("SVD failed to converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("function is not affine: probe discrepancy {discrepancy:e} exceeds {tolerance:e}")]
    NotAffine { discrepancy: f64, tolerance: f64 },

    #[error(
        "FITS cannot express every affine map when L < T - 2 (L = {context_len}, T = {horizon})"
    )]
    Expressivity { context_len: usize, horizon: usize },

    #[error("undefined cosine similarity: {0}")]
    UndefinedSimilarity(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ingestion error at data row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("parse error at data row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("split `{split}` has {len} rows but at least {required} are required")]
    SplitTooShort {
        split: &'static str,
        len: usize,
        required: usize,
    },

    #[error("channel {channel} has zero standard deviation on the training split")]
    ZeroVariance { channel: usize },

    #[error("unstable autoregressive coefficients (spectral radius {0:.4} >= 1)")]
    Unstable(f64),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
