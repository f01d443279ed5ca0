use alloc::string::String;

/// Errors raised by oracles, solvers and audits.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("block index {index} out of range for {count} blocks")]
    BlockOutOfRange { index: usize, count: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {what} at iteration {k}")]
    NonFinite { what: &'static str, k: usize },

    #[error("divergence at iteration {k}: F = {value:e} exceeds 1e10 x F(x0) = {initial:e}")]
    Diverged { k: usize, value: f64, initial: f64 },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("ODE integration blew up at t = {t}")]
    IntegrationBlowup { t: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
