//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by schedule, allocation, environment, and harness code.
///
/// `Config` maps to CLI exit code 2; everything else maps to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration is missing a key, has an unknown key, or fails validation.
    #[error("config error: {0}")]
    Config(String),

    /// An operation received an input outside its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A batch of samples was empty where at least one sample is required.
    #[error("empty batch: {0}")]
    EmptyBatch(String),

    /// A policy-gradient update produced a non-finite value.
    #[error("non-finite gradient at iteration {iteration}, agent {agent}")]
    NonFiniteGradient { iteration: u64, agent: usize },

    /// Filesystem or serialization failure while emitting run artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 for config errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
