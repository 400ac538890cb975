use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{op} is not supported for law {law}")]
    Unsupported { op: &'static str, law: String },

    #[error("tail ratio is unbounded: F({w}) = 1")]
    InfiniteBound { w: f64 },

    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("conditioning event accepted at rate {rate:.3e}, below floor {floor:.3e}")]
    InsufficientConditioning { rate: f64, floor: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("box {0} lies outside the sample window")]
    BoxOutsideWindow(String),

    #[error("sample window too small: need half-width {need_half_width} and horizon {need_horizon}, have {half_width} and {horizon}")]
    WindowTooSmall {
        need_half_width: i64,
        need_horizon: f64,
        half_width: i64,
        horizon: f64,
    },

    #[error("invalid bracket: survival {lo_estimate} at lower end and {hi_estimate} at upper end do not straddle target {target}")]
    BracketInvalid {
        lo_estimate: f64,
        hi_estimate: f64,
        target: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed sample dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
