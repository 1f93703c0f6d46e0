use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {detail}")]
    NotSquare { detail: String },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error(
        "matrix is not positive semi-definite (pivot {index} = {pivot:e}, threshold {threshold:e})"
    )]
    NotPsd {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {estimate:e}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("gradient undefined at zero distance (d = {distance:e})")]
    UndefinedGradient { distance: f64 },

    #[error("quadruple is degenerate: both pair-points coincide")]
    DegenerateQuadruple,

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("domain radius is zero")]
    ZeroRadius,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
