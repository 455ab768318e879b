//! Integer factorization by smooth subsum search.
//!
//! Relation candidates come from CRT subsums over a small factor base:
//! each candidate x̄ has f(x̄) = (x̄ + ⌈√N⌉)² − N divisible by a large known
//! modulus, so the quotient is small and has a good chance of being smooth.
//! Batch smoothness testing, large-prime partial combination and GF(2)
//! elimination finish the job. A single-polynomial quadratic sieve is
//! included as a baseline.
//!
//! ```
//! use num_bigint::BigUint;
//! use sss_core::{factor, RunConfig};
//!
//! let n: BigUint = "1000000016000000063".parse().unwrap();
//! let r = factor(&n, &RunConfig { seed: 1, ..RunConfig::default() }).unwrap();
//! assert!(r.is_complete());
//! assert_eq!(r.factors.len(), 2);
//! ```

pub mod crt;
pub mod decimal;
pub mod engine;
pub mod error;
pub mod factorbase;
pub mod linalg;
pub mod numtheory;
pub mod par;
pub mod qs;
pub mod relations;
pub mod search;
pub mod smoothness;

pub use engine::{collect_relations, factor, qs_factor, Algo, Collection, FactorResult, RunConfig, Stats};
pub use error::{Error, Result};
