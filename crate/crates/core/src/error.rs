use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("form is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("discriminant mismatch: {0} vs {1}")]
    DiscMismatch(i64, i64),
    #[error("form is not primitive: {0}")]
    NotPrimitive(String),
    #[error("-{0} is not a fundamental discriminant")]
    NotFundamental(u64),
    #[error("d = {0} is not 0 or 3 mod 4")]
    BadResidue(u64),
    #[error("ramification set of {0} has an even number of finite primes")]
    EvenRamification(u64),
    #[error("ramified product {m1} does not divide level {level}")]
    LevelNotDivisible { m1: u64, level: u64 },
    #[error("ideal class enumeration incomplete: mass {found} of {expected}")]
    IncompleteClassSet { found: String, expected: String },
    #[error("eigensystem not defined over Q: {0}")]
    IrrationalEigensystem(String),
    #[error("Atkin-Lehner signs differ at p = {0}")]
    AtkinLehnerMismatch(u64),
    #[error("lift vanishes identically up to the disc bound")]
    ZeroLift,
    #[error("coefficient ratios are inconsistent for operator at {0}: {1}")]
    NotEigen(u64, String),
    #[error("no testable coefficient in range for operator at {0}")]
    InsufficientDepth(u64),
    #[error("no prime anchor found within search bound {0}")]
    AnchorNotFound(i64),
    #[error("requested depth {requested} exceeds available depth {available}")]
    DepthExceeded { requested: i64, available: i64 },
    #[error("level {0} is not divisible by 4")]
    NotDivisibleBy4(u64),
    #[error("gcd(level, d) > 1: level {level}, d {d}")]
    RamifiedOverlap { level: u64, d: u64 },
    #[error("precision unreachable: need {needed} coefficients, have {available}")]
    PrecisionUnreachable { needed: usize, available: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    HardFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
