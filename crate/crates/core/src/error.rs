use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix data has {found} entries, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        found: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{op}: matrix is not square ({rows}x{cols})")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("{op}: matrix is not symmetric (|M[{i}][{j}] - M[{j}][{i}]| = {gap:e})")]
    NotSymmetric {
        op: &'static str,
        i: usize,
        j: usize,
        gap: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size violates stability bound: h * {norm_name} = {value} >= 2")]
    StepTooLarge { norm_name: &'static str, value: f64 },

    #[error("initial residual {residual:e} is already <= target {target:e}")]
    AlreadyBelowTarget { residual: f64, target: f64 },

    #[error("residual does not fall below {target:e} at any finite time (smallest seen {reached:e})")]
    NoCrossing { target: f64, reached: f64 },

    #[error("no regularization parameter attains discrepancy {target:e}")]
    NoRoot { target: f64 },

    #[error("{op}: no convergence within {cap} iterations")]
    IterationCap { op: &'static str, cap: usize },

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
