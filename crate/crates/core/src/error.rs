use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbolic window too short: need {needed} symbols on one side, have {available}")]
    WindowTooShort { needed: i64, available: i64 },

    #[error("unsupported system: {0}")]
    Unsupported(String),

    #[error("matrix is not invertible (|det| = {det:e})")]
    NotInvertible { det: f64 },

    #[error("bundle frames are not invariant: drift {drift:e} exceeds tolerance {tolerance:e}")]
    FrameNotInvariant { drift: f64, tolerance: f64 },

    #[error("no frame stored for the requested point")]
    FrameMissing,

    #[error("bundle tracking did not converge: drift {drift:e} after transient")]
    NonConvergence { drift: f64 },

    #[error("spectrum gap {gap:.4} below tracking tolerance {tolerance}")]
    GapTooSmall { gap: f64, tolerance: f64 },

    #[error("cone field has no cone at the image point")]
    ConeCoverage,

    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),

    #[error("empty sample")]
    EmptySample,
}
