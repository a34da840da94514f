use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, PronyError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PronyError {
    /// A precondition on shapes, sizes or values was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("not enough measurements: need L >= {required}, got L = {got}")]
    NotEnoughMeasurements { required: usize, got: usize },

    /// A root of the annihilator has no preimage in the admissible set.
    #[error("spurious root {root}: no admissible spectral point maps onto it")]
    SpuriousRoot { root: Complex64 },

    #[error("symbol is not injective: value {value} has {count} admissible preimages")]
    NotInjective { value: Complex64, count: usize },

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(PronyError::Contract(msg.into()))
}
