use num_complex::Complex64;

use crate::solver::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported constellation order {0}; accepted orders are 4, 8 and 16")]
    UnsupportedOrder(usize),

    #[error("constellation point index {index} out of range for {order}-QAM")]
    PointIndexOutOfRange { index: usize, order: usize },

    #[error("cannot detect non-finite sample {0}")]
    NonFiniteSample(Complex64),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("channel row {0} has zero norm")]
    ZeroNormRow(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel matrix is rank deficient or has more users than antennas")]
    RankDeficient,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precoding failed on channel {channel}, slot {slot}: {status:?}")]
    SlotFailed {
        channel: usize,
        slot: usize,
        status: SolveStatus,
    },

    #[error("precoder returned {0:?}")]
    Precode(SolveStatus),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
