//! Shared error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus must be an odd prime >= 3, got {0}")]
    InvalidModulus(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("not a projective point: zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("codimension out of range: k = {k} must satisfy 1 <= k < n = {n}")]
    CodimensionOutOfRange { k: usize, n: usize },
    #[error("matrix is singular mod {0}")]
    SingularMatrix(u64),
    #[error("not a blocking set")]
    NotBlocking,
    #[error("degenerate cone: base point lies in the vertex")]
    DegenerateCone,
    #[error("construction needs {expected} distinct primes, got {got}")]
    WrongPrimeCount { expected: usize, got: usize },
    #[error("construction requires k >= 2 (for k = 1 use the projective triangle directly)")]
    VertexWouldBeEmpty,
    #[error("ambient dimension {n} too small: need n >= {min}")]
    AmbientTooSmall { n: usize, min: usize },
    #[error("q-free radical undefined for zero")]
    RadOfZero,
    #[error("set elements must be nonzero")]
    ZeroElement,
    #[error("set of integers must be nonempty")]
    EmptySet,
    #[error("set contains a perfect q-th power; the projective image is undefined at 0")]
    PerfectPowerPresent,
    #[error("exponent must be nonzero mod q")]
    ZeroExponent,
    #[error("exponent out of range [1, q-1]: {0}")]
    ExponentOutOfRange(u64),
    #[error("repeated prime {0}")]
    DuplicatePrime(u64),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cannot factor {0}: need a natural number >= 2")]
    FactorizeDomain(u64),
    #[error("residue symbol undefined: {p} divides {s}")]
    SymbolUndefined { s: String, p: u64 },
    #[error("residue test modulo p = q = {0} is excluded")]
    ModulusEqualsQ(u64),
    #[error("modulus {0} shares a factor with delta; excluded from the residue test")]
    ExcludedModulus(u64),
}
