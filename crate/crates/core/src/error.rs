use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are grouped by how a caller is expected to react: validation
/// failures ([`Error::Invalid`] and friends) are user mistakes, [`Error::Budget`]
/// means a guarded search refused to run or ran out of work allowance, and
/// [`Error::Invariant`] signals that a mathematical guarantee was contradicted,
/// which can only mean a bug.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} out of range (need 2 <= q <= 65536)")]
    ModulusOutOfRange(u64),

    #[error("field mismatch: q={left} vs q={right}")]
    FieldMismatch { left: u32, right: u32 },

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for q^d = {limit}")]
    IndexOutOfRange { index: u64, limit: u64 },

    #[error("coordinate {value} out of range for q = {q}")]
    CoordinateOutOfRange { value: u64, q: u32 },

    #[error("t must be a nonzero field element")]
    ZeroThreshold,

    #[error("normal vector must be nonzero")]
    ZeroNormal,

    #[error("space too large: q^d = {0} exceeds 2^31")]
    SpaceTooLarge(u128),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("work estimate {estimate} exceeds budget {budget}")]
    Budget { estimate: u128, budget: u128 },

    #[error("count overflowed 128-bit accumulator")]
    Overflow,

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
