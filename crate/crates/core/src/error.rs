use thiserror::Error;

use crate::scenario::ValidationErrors;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationErrors),

    #[error("element series differ in length, start time or sample rate")]
    LengthMismatch,

    #[error("window [{start}, {start}+{len}) exceeds series of {series_len} samples")]
    WindowOutOfRange {
        start: usize,
        len: usize,
        series_len: usize,
    },

    #[error("line at {frequency} Hz is not below the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { frequency: f64, nyquist: f64 },

    #[error("harmonic order {0} is not a positive odd integer")]
    EvenOrder(u32),

    #[error("{available} snapshots cannot support {required} sources")]
    InsufficientWindows { available: usize, required: usize },

    #[error("no snapshots supplied")]
    EmptySnapshotSet,

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge within {0} rotations")]
    ConvergenceFailure(usize),

    #[error("{sources} sources leave no noise subspace for {elements} elements")]
    SubspaceDimension { sources: usize, elements: usize },

    #[error("invalid angle grid: {0}")]
    InvalidGrid(String),

    #[error("signal dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
