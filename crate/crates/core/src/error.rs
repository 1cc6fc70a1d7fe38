use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// `two_m` and `two_j` disagree in parity, so `m` is not a valid projection.
    #[error("parity mismatch: two_m = {two_m} cannot pair with two_j = {two_j}")]
    ParityMismatch { two_j: u32, two_m: i64 },

    #[error("out of range: |two_m| = {} exceeds two_j = {two_j}", two_m.abs())]
    OutOfRange { two_j: u32, two_m: i64 },

    /// The exact k-sum backend was asked for a spin larger than it supports,
    /// or its output failed the unitarity check.
    #[error("d-matrix backend overflow: {0}")]
    BackendOverflow(String),

    #[error("norm drift {deviation:e} exceeds tolerance {tolerance:e}")]
    NormDrift { deviation: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular absorption system: {0}")]
    SingularSystem(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

pub type Result<T> = std::result::Result<T, Error>;
