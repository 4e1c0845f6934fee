use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("infinite valuation: zero has no unit part")]
    InfiniteValuation,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("cubic residue test needs p = 1 mod 3, got p = {0}")]
    NotOneModThree(u64),

    #[error("coefficient {index} is zero")]
    ZeroCoefficient { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{p}^{digits} does not fit the fixed-width residue arithmetic")]
    PrecisionOverflow { p: u64, digits: u32 },

    #[error("p-adic search undecided for {coeffs:?} at p = {p} after {nodes} nodes")]
    Undecided { coeffs: [i128; 4], p: u64, nodes: u64 },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("form parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
