//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A probability mass function failed validation (negative mass, bad
    /// normalization, empty support).
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    /// A parameter was outside its allowed range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument fell outside the domain of an operation.
    #[error("out of domain: {0}")]
    Domain(String),

    /// The model is too large for exact enumeration.
    #[error("model too large for exact enumeration: {0}")]
    TooLarge(String),

    /// Moment matching needs E(W) > Var(W); the model is overdispersed.
    #[error("moment-matched binomial fit undefined: {0}")]
    Overdispersed(String),

    /// A bound does not apply to the given model or parameterization.
    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    /// A run configuration could not be parsed or validated.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
