use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("population exceeded the cap of {cap} particles at t = {time}")]
    PopulationCap { cap: usize, time: f64 },

    #[error("degenerate population: {0}")]
    Degenerate(String),

    #[error("{0} is not a checkpoint time")]
    NotACheckpoint(f64),

    #[error("unknown particle index {index} in a generation of size {size}")]
    UnknownParticle { index: usize, size: usize },

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
