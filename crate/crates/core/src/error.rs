use thiserror::Error;

use crate::time::Time;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("scenario family must contain at least one law")]
    EmptyFamily,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "time {time} is not on the dyadic grid of level {level}; use extend-to-time for non-dyadic times"
    )]
    NonDyadicTime { time: Time, level: u32 },
    #[error("no kernel for interval [{start}, {end}] in model '{model}'")]
    MissingInterval { model: String, start: Time, end: Time },
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unbounded expression: {0}")]
    Unbounded(String),
    #[error("CFL condition violated (ratio {ratio:.4} > 0.5); use tau <= {suggested_tau:.6e}")]
    Cfl { ratio: f64, suggested_tau: f64 },
    #[error("observation times too close for level {level}; minimal feasible level is {minimal}")]
    TimesTooClose { level: u32, minimal: u32 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
