//! Factor base 𝓕 and small factor base 𝓢 for f(x) = (x + ⌈√N⌉)² − N.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numtheory::{
    is_perfect_power, is_probable_prime, isqrt_ceil, legendre_u64, mod_small, mod_small_unsigned,
    small_primes, tonelli_shanks,
};

/// Rows of the sizing table: (largest digit count covered, m, n).
/// Digits 75–77 are absent from the published table and fall through to the
/// 78–80 row.
const SIZE_TABLE: [(usize, usize, usize); 18] = [
    (18, 60, 12),
    (25, 150, 30),
    (34, 200, 40),
    (36, 300, 60),
    (38, 400, 80),
    (40, 500, 100),
    (42, 600, 120),
    (44, 700, 140),
    (48, 1000, 200),
    (52, 1200, 240),
    (56, 2000, 400),
    (60, 4000, 800),
    (66, 6000, 1200),
    (74, 10000, 2000),
    (80, 30000, 6000),
    (88, 50000, 10000),
    (94, 60000, 12000),
    (100, 100000, 20000),
];

/// Target sizes (m, n) for an input with `digit_count` decimal digits.
/// Inputs beyond 100 digits reuse the last row.
pub fn table_sizes(digit_count: usize) -> (usize, usize) {
    SIZE_TABLE
        .iter()
        .find(|&&(max_digits, _, _)| digit_count <= max_digits)
        .map(|&(_, m, n)| (m, n))
        .unwrap_or((100000, 20000))
}

/// An odd factor-base prime with both roots of f modulo p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FbPrime {
    pub p: u64,
    /// `roots.0` derives from the smaller square root of N mod p.
    pub roots: (u64, u64),
}

impl FbPrime {
    pub fn root(&self, choice: u8) -> u64 {
        match choice {
            1 => self.roots.0,
            2 => self.roots.1,
            _ => panic!("root choice must be 1 or 2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorBase {
    n: BigInt,
    sqrt_ceil: BigInt,
    primes: Vec<u64>,
    odd: Vec<FbPrime>,
    small_len: usize,
}

impl FactorBase {
    pub fn n(&self) -> &BigInt {
        &self.n
    }

    /// ⌈√N⌉, the shift of the polynomial.
    pub fn sqrt_ceil(&self) -> &BigInt {
        &self.sqrt_ceil
    }

    /// All primes of 𝓕 in ascending order, 2 first.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Odd primes of 𝓕 with their roots.
    pub fn odd(&self) -> &[FbPrime] {
        &self.odd
    }

    /// The small factor base 𝓢.
    pub fn small(&self) -> &[FbPrime] {
        &self.odd[..self.small_len]
    }

    /// 𝓕 \ 𝓢 (without 2).
    pub fn large(&self) -> &[FbPrime] {
        &self.odd[self.small_len..]
    }

    /// p_m, the largest prime in 𝓕.
    pub fn largest(&self) -> u64 {
        *self.primes.last().expect("factor base is never empty")
    }

    /// Length of an exponent vector: one sign slot plus one per prime.
    pub fn vector_len(&self) -> usize {
        self.primes.len() + 1
    }

    /// f(x) = (x + ⌈√N⌉)² − N.
    pub fn eval(&self, x: &BigInt) -> BigInt {
        let t = x + &self.sqrt_ceil;
        &t * &t - &self.n
    }
}

/// Builds 𝓕 from the first `2m` primes and 𝓢 as its first `n` odd primes.
///
/// A scanned prime dividing N comes back as [`Error::FoundFactor`].
pub fn build_factor_bases(n_value: &BigUint, m: usize, n: usize) -> Result<FactorBase> {
    if n_value.is_even() {
        return Err(Error::InvalidInput(format!("{n_value} is even")));
    }
    if *n_value < BigUint::from(9u32) || is_probable_prime(n_value) {
        return Err(Error::InvalidInput(format!("{n_value} is not an odd composite")));
    }
    if let Some((b, e)) = is_perfect_power(n_value) {
        return Err(Error::InvalidInput(format!("{n_value} = {b}^{e} is a perfect power")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("factor base size m must be positive".into()));
    }
    let big_n = BigInt::from(n_value.clone());
    let sqrt_ceil = isqrt_ceil(&big_n)?;

    let mut primes = vec![2u64];
    let mut odd = Vec::new();
    for p in small_primes(2 * m).into_iter().skip(1) {
        let n_mod_p = mod_small_unsigned(n_value, p);
        if n_mod_p == 0 {
            return Err(Error::FoundFactor(BigUint::from(p)));
        }
        if legendre_u64(n_mod_p, p) != 1 {
            continue;
        }
        let t = tonelli_shanks(n_mod_p, p)?;
        let c = mod_small(&sqrt_ceil, p);
        let s1 = (t + p - c) % p;
        let s2 = (2 * p - t - c) % p;
        debug_assert_ne!(s1, s2);
        primes.push(p);
        odd.push(FbPrime { p, roots: (s1, s2) });
    }
    if odd.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no odd factor-base primes for {n_value} with m = {m}"
        )));
    }
    let fb = FactorBase {
        n: big_n,
        sqrt_ceil,
        primes,
        small_len: n.min(odd.len()),
        odd,
    };
    for q in &fb.odd {
        for s in [q.roots.0, q.roots.1] {
            if !mod_small(&fb.eval(&BigInt::from(s)), q.p).is_zero() {
                return Err(Error::Internal(format!("root {s} of f mod {} is wrong", q.p)));
            }
        }
    }
    Ok(fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::legendre;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_rows() {
        assert_eq!(table_sizes(30), (200, 40));
        assert_eq!(table_sizes(60), (4000, 800));
        assert_eq!(table_sizes(100), (100000, 20000));
        assert_eq!(table_sizes(5), (60, 12));
        assert_eq!(table_sizes(26), (200, 40));
        assert_eq!(table_sizes(75), (30000, 6000));
        assert_eq!(table_sizes(77), (30000, 6000));
        assert_eq!(table_sizes(74), (10000, 2000));
        assert_eq!(table_sizes(150), (100000, 20000));
        for (_, m, n) in SIZE_TABLE {
            assert_eq!(m, 5 * n);
        }
    }

    #[test]
    fn early_factor_when_scanned_prime_divides() {
        assert_eq!(
            build_factor_bases(&BigUint::from(91u32), 4, 2),
            Err(Error::FoundFactor(BigUint::from(7u32)))
        );
    }

    #[test]
    fn invalid_inputs() {
        for bad in [100u32, 97, 121, 243] {
            assert!(matches!(
                build_factor_bases(&BigUint::from(bad), 10, 2),
                Err(Error::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn residue_filter_on_8051() {
        let n = BigUint::from(8051u32);
        let fb = build_factor_bases(&n, 10, 3).unwrap();
        let scanned = small_primes(20);
        let expected: Vec<u64> = scanned
            .iter()
            .copied()
            .filter(|&p| p == 2 || legendre(&BigInt::from(8051), p).unwrap() == 1)
            .collect();
        assert_eq!(fb.primes(), expected.as_slice());
        assert_eq!(fb.primes()[0], 2);
        assert!(fb.primes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(fb.small().len(), 3);
        assert_eq!(fb.small(), &fb.odd()[..3]);
        for q in fb.odd() {
            assert_ne!(q.roots.0, q.roots.1);
            for s in [q.roots.0, q.roots.1] {
                let v = fb.eval(&BigInt::from(s));
                assert_eq!(mod_small(&v, q.p), 0);
            }
        }
    }

    #[test]
    fn small_base_shrinks_when_short() {
        let fb = build_factor_bases(&BigUint::from(8051u32), 3, 40).unwrap();
        assert_eq!(fb.small().len(), fb.odd().len());
        assert!(fb.large().is_empty());
    }

    #[test]
    fn size_near_m_for_30_digit_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lo: BigUint = num_traits::pow(BigUint::from(10u32), 29);
        let hi: BigUint = num_traits::pow(BigUint::from(10u32), 30);
        let mut built = 0;
        while built < 10 {
            use num_bigint::RandBigInt;
            let n = rng.gen_biguint_range(&lo, &hi) | BigUint::from(1u32);
            let m = 200;
            match build_factor_bases(&n, m, 40) {
                Ok(fb) => {
                    let len = fb.len() as f64;
                    assert!(len >= 0.3 * 2.0 * m as f64 && len <= 0.7 * 2.0 * m as f64, "{len}");
                    built += 1;
                    assert_eq!(build_factor_bases(&n, m, 40).unwrap(), fb);
                }
                Err(Error::FoundFactor(_)) | Err(Error::InvalidInput(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}
