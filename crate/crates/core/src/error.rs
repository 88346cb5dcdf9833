use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("unknown qutrit level `{0}` (expected one of g, a, e)")]
    InvalidLevel(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("Fock index {n} does not fit below cutoff {dim}")]
    CutoffOverflow { n: usize, dim: usize },

    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.1e}; cutoff must be at least {required_dim}")]
    Truncation {
        tail: f64,
        tolerance: f64,
        required_dim: usize,
    },

    #[error("population {population:.3e} reached the Fock cutoff during evolution (tolerance {tolerance:.1e})")]
    CutoffReached { population: f64, tolerance: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(&'static str),

    #[error("state is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter `{key}` = {value}: {reason}")]
    InvalidParameter {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("integrator diverged: {invariant} off by {deviation:.3e}; retry with dt <= {suggested_dt:.3e} s")]
    Divergence {
        invariant: &'static str,
        deviation: f64,
        suggested_dt: f64,
    },

    #[error("step budget exhausted after {0} steps")]
    StepLimit(usize),

    #[error("not invertible: {0}")]
    NonInvertible(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
