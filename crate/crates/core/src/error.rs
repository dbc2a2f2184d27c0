use thiserror::Error;

use crate::greedy::SparseSolution;
use crate::linalg::LeastSquaresResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is numerically rank deficient (rank {rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("NNLS did not converge within {iterations} iterations")]
    NnlsIterationCap {
        iterations: usize,
        best: Box<LeastSquaresResult>,
    },

    #[error("homotopy path exceeded {cap} breakpoints")]
    BreakpointCap {
        cap: usize,
        partial: Box<SparseSolution>,
    },

    #[error("linear program solver failed: {0}")]
    Lp(String),

    #[error("enumeration of {count} supports exceeds the guard of {guard}")]
    EnumerationGuard { count: u128, guard: u128 },

    #[error("image format: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
