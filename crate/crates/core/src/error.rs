use num_bigint::{BigInt, BigUint};
use thiserror::Error;

/// Errors raised across the factorization pipeline.
///
/// `FoundFactor` is not a failure: a nontrivial divisor of N turned up as a
/// side effect (a factor-base prime dividing N, a shared cofactor, a
/// non-invertible modulus). It travels through `?` so that every layer
/// surfaces it to the engine, which treats it as an early split.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{n} is not a quadratic residue modulo {p}")]
    NoRoot { n: u64, p: u64 },

    #[error("not invertible: gcd is {gcd}")]
    NotInvertible { gcd: BigInt },

    #[error("value is not smooth over the factor base (cofactor {cofactor})")]
    NotSmooth { cofactor: BigUint },

    #[error("found factor {0}")]
    FoundFactor(BigUint),

    #[error("relation collection starved: {0}")]
    Starved(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
