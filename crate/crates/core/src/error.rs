use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability entries must be finite and non-negative")]
    InvalidProbability,
    #[error("probabilities sum to {sum}, expected 1 within 1e-12")]
    NotNormalized { sum: f64 },
    #[error("alphabet must contain at least two symbols, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet of {0} symbols exceeds the supported maximum of 256")]
    AlphabetTooLarge(usize),
    #[error("alphabet mismatch: {left} vs {right} symbols")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("absolute continuity violated at symbol {symbol}")]
    AbsoluteContinuityViolation { symbol: usize },
    #[error("Willie's output distributions coincide (Q1 = Q0)")]
    IndistinguishableWillieOutputs,
    #[error("variance must be strictly positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("mixture weight {0} is outside [0, 1]")]
    OutOfRangeAlpha(f64),
    #[error("covertness budget infeasible for n = {n}, L = {slots}, delta = {delta}")]
    CovertnessInfeasible { n: u64, slots: u64, delta: f64 },
    #[error("keyless condition violated: {0}")]
    KeylessConditionViolated(String),
    #[error("argument `{0}` must be strictly positive")]
    NonPositiveArgument(&'static str),
    #[error("argument out of range: {0}")]
    RangeViolation(String),
    #[error("instance with {size} sequences is too large to enumerate")]
    TooLargeToEnumerate { size: f64 },
    #[error("probability tables are defined over different sequence spaces")]
    KeyMismatch,
    #[error("trial count must be positive")]
    NonPositiveTrials,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("slot {slot} is outside 1..={slots}")]
    SlotOutOfRange { slot: usize, slots: usize },
    #[error("expected a sequence of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("estimated cost {cost:e} exceeds the cap {cap:e}")]
    CostCapExceeded { cost: f64, cap: f64 },
    #[error("malformed codebook file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
