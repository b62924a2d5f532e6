use thiserror::Error;

/// Errors raised by the arithmetic, character and evaluation layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("valuation of zero is infinite")]
    InfiniteValuation,
    #[error("insufficient precision: need {needed} digits, have {available}")]
    InsufficientPrecision { needed: i64, available: i64 },
    #[error("precision mismatch: {0} vs {1}")]
    PrecisionMismatch(u32, u32),
    #[error("enumeration budget exceeded: {what} needs {size} > {budget}")]
    Budget { what: &'static str, size: u64, budget: u64 },
    #[error("cyclotomic modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("linearization needs conductor exponent at least 2, got {0}")]
    ConductorTooSmall(u32),
    #[error("index {i} outside the range ({lo}, {hi}]")]
    RangeViolation { i: u32, lo: u32, hi: u32 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("element is not in K*(1): {0}")]
    NotInKStar(String),
    #[error("basis is not an order: {0}")]
    NotAnOrder(String),
}

pub type Result<T> = std::result::Result<T, Error>;
