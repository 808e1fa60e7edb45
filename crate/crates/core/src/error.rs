//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    InvalidDimension,

    #[error("matrix must be square and symmetric")]
    NotSymmetric,

    #[error("matrix is not positive semidefinite: eigenvalue {0:e} below -1e-10")]
    NotPsd(f64),

    #[error("tuple order a = {0} must be a positive even integer")]
    InvalidOrder(usize),

    #[error("lag cap q must be at least 1")]
    InvalidLagCap,

    #[error("sample size must be at least 1")]
    EmptySample,

    #[error("series length {found} does not match horizon {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("sample size T = {t_len} is too small for order a = {a} with lag cap q = {q}; need T >= {needed}")]
    InsufficientSample {
        t_len: usize,
        q: usize,
        a: usize,
        needed: usize,
    },

    #[error("tuple enumeration too large: {count} tuples exceed the oracle guard of {limit}")]
    OracleTooLarge { count: u128, limit: u128 },

    #[error("tuple count overflows the 128-bit accumulator")]
    CountOverflow,

    #[error("degenerate variance estimate ({0:e}) for order a = {1}; cannot standardize")]
    DegenerateVariance(f64, usize),

    #[error("series {0} has zero variance")]
    ZeroVariance(usize),

    #[error("lag {tau} must be smaller than the sample size T = {t_len}")]
    InvalidLag { tau: usize, t_len: usize },

    #[error("significance level {0} must lie strictly inside (0, 1)")]
    InvalidAlpha(f64),

    #[error("probability {0} must lie strictly inside (0, 1)")]
    InvalidProbability(f64),

    #[error("VAR(1) coefficient {0} is nonstationary; need |value| < 1")]
    NonstationaryCoeff(f64),

    #[error("non-finite value encountered in series {series} at time {time}")]
    NonFinite { series: usize, time: usize },

    #[error("calibration needs at least {needed} replications, got {got}")]
    TooFewReplications { needed: usize, got: usize },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}
