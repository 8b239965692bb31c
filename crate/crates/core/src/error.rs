use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the detection laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("singular triangular system (zero diagonal at row {row})")]
    SingularTriangular { row: usize },

    #[error("zero or negative diagonal entry {value:e} at index {index}")]
    ZeroDiagonal { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bit index {bit} out of range for {bits_per_symbol} bits per symbol")]
    BitIndexOutOfRange { bit: usize, bits_per_symbol: usize },

    #[error("bit sequence of length {len} is not a multiple of {bits_per_symbol}")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("LLR block of length {len} does not match a terminated codeword")]
    MalformedCodeword { len: usize },

    #[error("effective gain {mu} of stream {stream} outside (0, 1]")]
    GainOutOfRange { stream: usize, mu: f64 },

    #[error("correlation factor {0} outside [0, 1]")]
    InvalidCorrelation(f64),

    #[error("invalid convolutional code: {0}")]
    InvalidCode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
