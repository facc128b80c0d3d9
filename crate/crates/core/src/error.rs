use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("frame is not minimum phase (min |h| = {min_abs}, winding = {winding})")]
    NotMinimumPhase { min_abs: f64, winding: i64 },

    #[error("insufficient data: cluster {symbol} has {count} points, need at least {required}")]
    InsufficientData {
        symbol: u8,
        count: usize,
        required: usize,
    },

    #[error("cluster covariance is zero; SNR is unbounded (noiseless input?)")]
    InfiniteSnr,

    #[error("degenerate ellipse: covariance is singular or not positive definite")]
    DegenerateEllipse,
}

pub type Result<T> = std::result::Result<T, KkError>;
