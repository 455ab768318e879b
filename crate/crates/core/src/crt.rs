//! CRT subsum construction over the small factor base.
//!
//! The coefficients Λᵢ = (μ/pᵢ)·((μ/pᵢ)⁻¹ mod pᵢ) are computed once against
//! μ = ∏𝓢 and remain valid modulo any M | μ, so building x for a new M needs
//! no modular inversions. Δᵢ = Λᵢ·(s_{i,2} − s_{i,1}) flips the root chosen
//! at index i with a single addition.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::factorbase::FbPrime;
use crate::numtheory::{inv_mod_u64, mod_small};

#[derive(Debug, Clone)]
pub struct CrtPrecomp {
    primes: Vec<u64>,
    roots: Vec<(u64, u64)>,
    mu: BigInt,
    lambda: Vec<BigInt>,
    delta: Vec<BigInt>,
}

impl CrtPrecomp {
    pub fn new(small: &[FbPrime]) -> Result<Self> {
        if small.is_empty() {
            return Err(Error::InvalidArgument("small factor base is empty".into()));
        }
        let mu: BigInt = small.iter().map(|q| BigInt::from(q.p)).product();
        let mut lambda = Vec::with_capacity(small.len());
        let mut delta = Vec::with_capacity(small.len());
        for q in small {
            let cofactor = &mu / q.p;
            let gamma = inv_mod_u64(mod_small(&cofactor, q.p), q.p).ok_or_else(|| {
                Error::Internal(format!("small factor base prime {} repeated", q.p))
            })?;
            let l = cofactor * gamma;
            let d = &l * (BigInt::from(q.roots.1) - BigInt::from(q.roots.0));
            lambda.push(l);
            delta.push(d);
        }
        Ok(CrtPrecomp {
            primes: small.iter().map(|q| q.p).collect(),
            roots: small.iter().map(|q| q.roots).collect(),
            mu,
            lambda,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn mu(&self) -> &BigInt {
        &self.mu
    }

    pub fn lambda(&self, i: usize) -> &BigInt {
        &self.lambda[i]
    }

    pub fn delta(&self, i: usize) -> &BigInt {
        &self.delta[i]
    }

    pub fn prime(&self, i: usize) -> u64 {
        self.primes[i]
    }

    pub fn root(&self, i: usize, choice: u8) -> u64 {
        match choice {
            1 => self.roots[i].0,
            2 => self.roots[i].1,
            _ => panic!("root choice must be 1 or 2"),
        }
    }
}

/// Root choice per small prime: 0 leaves x mod pᵢ free, 1 or 2 fixes it to
/// s_{i,1} or s_{i,2}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Representation(Vec<u8>);

impl Representation {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&e| e > 2) {
            return Err(Error::InvalidArgument(format!("representation entry {bad} not in 0..=2")));
        }
        Ok(Representation(entries))
    }

    /// All-ones on `indices`, zero elsewhere.
    pub fn ones(len: usize, indices: &[usize]) -> Self {
        let mut entries = vec![0u8; len];
        for &i in indices {
            entries[i] = 1;
        }
        Representation(entries)
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&e| e != 0).count()
    }
}

/// x together with a modulus M built from distinct small primes, M | f(x).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePair {
    pub x: BigInt,
    pub modulus: BigInt,
}

/// Representative of x mod M in (−⌈M/2⌉, ⌊M/2⌋].
pub fn centered(x: &BigInt, modulus: &BigInt) -> BigInt {
    let r = x.mod_floor(modulus);
    if r > modulus / 2 {
        r - modulus
    } else {
        r
    }
}

pub fn get_x(rep: &Representation, pre: &CrtPrecomp) -> Result<CandidatePair> {
    if rep.0.len() != pre.len() {
        return Err(Error::InvalidArgument(format!(
            "representation has length {}, expected {}",
            rep.0.len(),
            pre.len()
        )));
    }
    let mut modulus = BigInt::one();
    let mut sum = BigInt::zero();
    for (i, &choice) in rep.0.iter().enumerate() {
        if choice == 0 {
            continue;
        }
        modulus *= pre.prime(i);
        sum += pre.lambda(i) * pre.root(i, choice);
    }
    if modulus.is_one() {
        return Err(Error::InvalidArgument("empty representation".into()));
    }
    Ok(CandidatePair {
        x: centered(&sum, &modulus),
        modulus,
    })
}

/// Moves x from s_{i,1} to s_{i,2} modulo pᵢ (`direction = 1`) or back
/// (`direction = -1`), leaving x mod M/pᵢ untouched.
pub fn swap_root(
    x: &BigInt,
    i: usize,
    direction: i8,
    modulus: &BigInt,
    pre: &CrtPrecomp,
) -> Result<BigInt> {
    if i >= pre.len() || mod_small(modulus, pre.prime(i)) != 0 {
        return Err(Error::InvalidArgument(format!(
            "small prime index {i} does not divide the modulus"
        )));
    }
    let shifted = match direction {
        1 => x + pre.delta(i),
        -1 => x - pre.delta(i),
        _ => return Err(Error::InvalidArgument(format!("direction {direction} not ±1"))),
    };
    Ok(centered(&shifted, modulus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base(ps: &[(u64, u64, u64)]) -> Vec<FbPrime> {
        ps.iter().map(|&(p, a, b)| FbPrime { p, roots: (a, b) }).collect()
    }

    /// Textbook CRT with per-call inverses cᵢ = (M/pᵢ)⁻¹ mod pᵢ.
    fn classical_crt(residues: &[(u64, u64)]) -> (BigInt, BigInt) {
        let m: BigInt = residues.iter().map(|&(p, _)| BigInt::from(p)).product();
        let mut x = BigInt::zero();
        for &(p, s) in residues {
            let mp = &m / p;
            let c = inv_mod_u64(mod_small(&mp, p), p).unwrap();
            x += mp * c * s;
        }
        (centered(&x, &m), m)
    }

    fn brute_force_crt(residues: &[(u64, u64)]) -> i64 {
        let m: u64 = residues.iter().map(|&(p, _)| p).product();
        (0..m as i64)
            .find(|&x| residues.iter().all(|&(p, s)| x as u64 % p == s))
            .unwrap()
    }

    #[test]
    fn lambda_for_3_5() {
        let pre = CrtPrecomp::new(&base(&[(3, 1, 2), (5, 2, 3)])).unwrap();
        assert_eq!(pre.mu(), &BigInt::from(15));
        // brute-force search of the CRT basis in [0, 15)
        let basis = |own: u64, other: u64| {
            (0..15u64).find(|&v| v % own == 1 && v % other == 0).unwrap()
        };
        assert_eq!(basis(3, 5), 10);
        assert_eq!(basis(5, 3), 6);
        assert_eq!(pre.lambda(0), &BigInt::from(10));
        assert_eq!(pre.lambda(1), &BigInt::from(6));
        assert_eq!(pre.delta(0), &BigInt::from(10));
        assert_eq!(mod_small(pre.delta(0), 3), 1);
        assert_eq!(mod_small(pre.delta(0), 5), 0);
    }

    #[test]
    fn single_prime() {
        let pre = CrtPrecomp::new(&base(&[(3, 1, 2)])).unwrap();
        assert_eq!(pre.lambda(0), &BigInt::from(1));
        let pair = get_x(&Representation::new(vec![2]).unwrap(), &pre).unwrap();
        assert_eq!(pair.modulus, BigInt::from(3));
        assert_eq!(pair.x, BigInt::from(-1));
    }

    #[test]
    fn get_x_examples() {
        let pre = CrtPrecomp::new(&base(&[(3, 1, 2), (5, 2, 3)])).unwrap();
        assert_eq!(brute_force_crt(&[(3, 1), (5, 2)]), 7);
        let pair = get_x(&Representation::new(vec![1, 1]).unwrap(), &pre).unwrap();
        assert_eq!(pair, CandidatePair { x: BigInt::from(7), modulus: BigInt::from(15) });
        assert!(matches!(
            get_x(&Representation::new(vec![0, 0]).unwrap(), &pre),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Representation::new(vec![3]).is_err());
    }

    #[test]
    fn swap_root_examples() {
        let pre = CrtPrecomp::new(&base(&[(3, 1, 2), (5, 2, 3)])).unwrap();
        let m = BigInt::from(15);
        assert_eq!(brute_force_crt(&[(3, 2), (5, 2)]), 2);
        let swapped = swap_root(&BigInt::from(7), 0, 1, &m, &pre).unwrap();
        assert_eq!(swapped, BigInt::from(2));
        assert_eq!(swap_root(&swapped, 0, -1, &m, &pre).unwrap(), BigInt::from(7));
        assert!(swap_root(&BigInt::from(2), 1, 1, &BigInt::from(3), &pre).is_err());
    }

    #[test]
    fn centered_range() {
        let m = BigInt::from(15);
        let all: Vec<i64> = (0..15)
            .map(|v| centered(&BigInt::from(v), &m).try_into().unwrap())
            .collect();
        assert_eq!(*all.iter().min().unwrap(), -7);
        assert_eq!(*all.iter().max().unwrap(), 7);
        assert_eq!(centered(&BigInt::from(5), &BigInt::from(10)), BigInt::from(5));
        assert_eq!(centered(&BigInt::from(6), &BigInt::from(10)), BigInt::from(-4));
    }

    fn primes_fixture() -> Vec<FbPrime> {
        // roots picked arbitrarily below each prime, distinct per prime
        let ps = [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
        ps.iter().map(|&p| FbPrime { p, roots: (1 % p, (p / 2 + 1) % p) }).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn lambda_shortcut_matches_classical(entries in proptest::collection::vec(0u8..=2, 12)) {
            prop_assume!(entries.iter().any(|&e| e != 0));
            let small = primes_fixture();
            let pre = CrtPrecomp::new(&small).unwrap();
            let rep = Representation::new(entries.clone()).unwrap();
            let pair = get_x(&rep, &pre).unwrap();
            let residues: Vec<(u64, u64)> = entries
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(i, &e)| (small[i].p, small[i].root(e)))
                .collect();
            let (x, m) = classical_crt(&residues);
            prop_assert_eq!(&pair.x, &x);
            prop_assert_eq!(&pair.modulus, &m);
            for (p, s) in residues {
                prop_assert_eq!(mod_small(&pair.x, p), s);
            }
        }

        #[test]
        fn swap_preserves_other_residues(entries in proptest::collection::vec(1u8..=1, 12), idx in 0usize..12) {
            let pre = CrtPrecomp::new(&primes_fixture()).unwrap();
            let pair = get_x(&Representation::new(entries).unwrap(), &pre).unwrap();
            let swapped = swap_root(&pair.x, idx, 1, &pair.modulus, &pre).unwrap();
            let rest = &pair.modulus / pre.prime(idx);
            prop_assert_eq!(pair.x.mod_floor(&rest), swapped.mod_floor(&rest));
            prop_assert_eq!(mod_small(&swapped, pre.prime(idx)), pre.root(idx, 2));
            let back = swap_root(&swapped, idx, -1, &pair.modulus, &pre).unwrap();
            prop_assert_eq!(back, pair.x);
        }
    }
}
