//! Batch smoothness detection with product and remainder trees.
//!
//! The default path reduces a boosted product η (every prime raised until
//! its power exceeds 2¹⁵) modulo each candidate and takes a single gcd.
//! It skips the repeated squarings, so a candidate carrying a very high
//! power of some prime may come back with a residual above 1. The exact
//! path performs the squarings and agrees with trial division.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::par::map_ordered;

/// Prime powers in η exceed this bound.
pub const BOOST_BOUND: u64 = 1 << 15;

/// Balanced binary product tree; `levels[0]` are the leaves.
#[derive(Debug, Clone)]
pub struct ProductTree {
    levels: Vec<Vec<BigUint>>,
}

impl ProductTree {
    pub fn new(leaves: Vec<BigUint>) -> Self {
        let mut levels = vec![if leaves.is_empty() { vec![BigUint::one()] } else { leaves }];
        while levels.last().unwrap().len() > 1 {
            let prev = levels.last().unwrap();
            let pairs: Vec<&[BigUint]> = prev.chunks(2).collect();
            let next = map_ordered(&pairs, |pair| match pair {
                [a, b] => a * b,
                [a] => a.clone(),
                _ => unreachable!(),
            });
            levels.push(next);
        }
        ProductTree { levels }
    }

    pub fn root(&self) -> &BigUint {
        &self.levels.last().unwrap()[0]
    }

    pub fn leaves(&self) -> &[BigUint] {
        &self.levels[0]
    }

    /// `z mod leaf` for every leaf, top-down.
    pub fn remainders(&self, z: &BigUint) -> Vec<BigUint> {
        let top = self.levels.len() - 1;
        let mut current = vec![if z < self.root() { z.clone() } else { z % self.root() }];
        for level in (0..top).rev() {
            let nodes = &self.levels[level];
            let idx: Vec<usize> = (0..nodes.len()).collect();
            current = map_ordered(&idx, |&j| {
                let parent = &current[j / 2];
                if parent < &nodes[j] {
                    parent.clone()
                } else {
                    parent % &nodes[j]
                }
            });
        }
        current
    }
}

/// A set of primes prepared for batch smoothness tests.
#[derive(Debug, Clone)]
pub struct SmoothBase {
    primes: Vec<u64>,
    tree: ProductTree,
    eta: BigUint,
}

impl SmoothBase {
    pub fn new(primes: &[u64]) -> Self {
        let tree = ProductTree::new(primes.iter().map(|&p| BigUint::from(p)).collect());
        let boosted: Vec<BigUint> = primes
            .iter()
            .map(|&p| {
                let mut pe = BigUint::from(p);
                while pe <= BigUint::from(BOOST_BOUND) {
                    pe *= p;
                }
                pe
            })
            .collect();
        let eta = ProductTree::new(boosted).root().clone();
        SmoothBase {
            primes: primes.to_vec(),
            tree,
            eta,
        }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Plain product of the primes (the product-tree root).
    pub fn product(&self) -> &BigUint {
        self.tree.root()
    }

    pub fn eta(&self) -> &BigUint {
        &self.eta
    }

    /// Non-smooth part of each candidate using a single gcd with η.
    pub fn residuals(&self, candidates: &[BigUint]) -> Result<Vec<BigUint>> {
        check_positive(candidates)?;
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let tree = ProductTree::new(candidates.to_vec());
        let rems = tree.remainders(&self.eta);
        Ok(candidates
            .iter()
            .zip(rems)
            .map(|(x, r)| x / x.gcd(&r))
            .collect())
    }

    /// Non-smooth part of each candidate, exact: (z mod x)^(2^e) with
    /// 2^(2^e) ≥ x before the gcd.
    pub fn residuals_exact(&self, candidates: &[BigUint]) -> Result<Vec<BigUint>> {
        check_positive(candidates)?;
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let tree = ProductTree::new(candidates.to_vec());
        let rems = tree.remainders(self.product());
        let pairs: Vec<(&BigUint, BigUint)> = candidates.iter().zip(rems).collect();
        Ok(map_ordered(&pairs, |(x, rem)| {
            let x = *x;
            let mut y = rem.clone();
            let bits = x.bits().max(1);
            let mut e = 0u32;
            while (1u64 << e) < bits {
                e += 1;
            }
            for _ in 0..e {
                y = (&y * &y) % x;
            }
            x / x.gcd(&y)
        }))
    }
}

fn check_positive(candidates: &[BigUint]) -> Result<()> {
    if candidates.iter().any(Zero::is_zero) {
        return Err(Error::InvalidArgument("smoothness candidates must be positive".into()));
    }
    Ok(())
}

/// Smoothness data for one factor base: the whole of 𝓕 plus the split
/// 𝓕 = 𝓕₁ ∪ 𝓕₂ with |𝓕|/|𝓕₁| = ρ used by the filter.
#[derive(Debug, Clone)]
pub struct SmoothnessContext {
    full: SmoothBase,
    first: SmoothBase,
    second: SmoothBase,
    rho: usize,
}

impl SmoothnessContext {
    pub fn new(primes: &[u64], rho: usize) -> Result<Self> {
        if rho < 2 {
            return Err(Error::InvalidArgument(format!("rho = {rho} must be at least 2")));
        }
        if primes.is_empty() {
            return Err(Error::InvalidArgument("empty factor base".into()));
        }
        let split = (primes.len() / rho).max(1);
        Ok(SmoothnessContext {
            full: SmoothBase::new(primes),
            first: SmoothBase::new(&primes[..split]),
            second: SmoothBase::new(&primes[split..]),
            rho,
        })
    }

    pub fn full(&self) -> &SmoothBase {
        &self.full
    }

    /// 𝓕₁ and 𝓕₂.
    pub fn partition(&self) -> (&SmoothBase, &SmoothBase) {
        (&self.first, &self.second)
    }

    pub fn rho(&self) -> usize {
        self.rho
    }
}

pub fn smooth_batch(ctx: &SmoothnessContext, candidates: &[BigUint]) -> Result<Vec<BigUint>> {
    ctx.full.residuals(candidates)
}

pub fn smooth_batch_exact(ctx: &SmoothnessContext, candidates: &[BigUint]) -> Result<Vec<BigUint>> {
    ctx.full.residuals_exact(candidates)
}

/// Result of the two-stage filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filtered {
    /// `(index into the input, final residual)` for candidates that passed
    /// the 𝓕₁ stage.
    pub residuals: Vec<(usize, BigUint)>,
    /// Number of candidates entering the filter.
    pub considered: usize,
}

impl Filtered {
    pub fn discarded(&self) -> usize {
        self.considered - self.residuals.len()
    }
}

/// True when `g < 10^(digits/2 − delta)`, compared exactly as
/// `g² < 10^(digits − 2·delta)`.
pub fn below_filter_threshold(g: &BigUint, digits: usize, delta: u32) -> bool {
    let exp = digits as i64 - 2 * delta as i64;
    if exp < 0 {
        return false;
    }
    g * g < num_traits::pow(BigUint::from(10u32), exp as usize)
}

/// Batch over 𝓕₁, keep residuals below 10^(d/2 − δ), batch the survivors'
/// residuals over 𝓕₂.
pub fn smooth_filter(
    ctx: &SmoothnessContext,
    candidates: &[BigUint],
    digits: usize,
    delta: u32,
) -> Result<Filtered> {
    let first = ctx.first.residuals(candidates)?;
    let (keep, rest): (Vec<usize>, Vec<BigUint>) = first
        .into_iter()
        .enumerate()
        .filter(|(_, g)| below_filter_threshold(g, digits, delta))
        .unzip();
    let second = ctx.second.residuals(&rest)?;
    Ok(Filtered {
        residuals: keep.into_iter().zip(second).collect(),
        considered: candidates.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Class {
    Full,
    Partial(BigUint),
    Reject,
}

/// Full iff g = 1, Partial iff 1 < g < multiplier·p_m. A zero multiplier
/// disables partials.
pub fn classify(g: &BigUint, largest_prime: u64, multiplier: u64) -> Class {
    if g.is_one() {
        Class::Full
    } else if *g > BigUint::one() && *g < BigUint::from(largest_prime as u128 * multiplier as u128) {
        Class::Partial(g.clone())
    } else {
        Class::Reject
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::primes_below;
    use proptest::prelude::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn trial_residual(mut x: u64, primes: &[u64]) -> u64 {
        for &p in primes {
            while x.is_multiple_of(p) {
                x /= p;
            }
        }
        x
    }

    #[test]
    fn product_tree_root_is_product() {
        let leaves: Vec<BigUint> = (1..=37u64).map(b).collect();
        let tree = ProductTree::new(leaves.clone());
        let plain: BigUint = leaves.iter().product();
        assert_eq!(tree.root(), &plain);
        let z = b(123_456_789_012_345);
        let rems = tree.remainders(&z);
        for (leaf, r) in leaves.iter().zip(rems) {
            assert_eq!(&z % leaf, r);
        }
    }

    #[test]
    fn boosted_eta_powers() {
        let base = SmoothBase::new(&[2, 3, 5, 7, 40009]);
        let mut eta = base.eta().clone();
        for p in [2u64, 3, 5, 7, 40009] {
            let mut pe = 1u64;
            while (&eta % p).is_zero() {
                eta /= p;
                pe *= p;
            }
            assert!(pe > BOOST_BOUND, "p = {p}: {pe}");
            assert!(pe / p <= BOOST_BOUND || p > BOOST_BOUND);
        }
        assert!(eta.is_one());
    }

    #[test]
    fn batch_examples() {
        let ctx = SmoothnessContext::new(&[2, 3, 5, 7], 2).unwrap();
        let c: Vec<BigUint> = [30, 49, 22, 143].into_iter().map(b).collect();
        let expected: Vec<BigUint> = [30u64, 49, 22, 143]
            .iter()
            .map(|&x| b(trial_residual(x, &[2, 3, 5, 7])))
            .collect();
        assert_eq!(expected, vec![b(1), b(1), b(11), b(143)]);
        assert_eq!(smooth_batch(&ctx, &c).unwrap(), expected);
        assert_eq!(smooth_batch_exact(&ctx, &c).unwrap(), expected);
        assert_eq!(smooth_batch(&ctx, &[b(1)]).unwrap(), vec![b(1)]);
        assert_eq!(smooth_batch(&ctx, &[b(1_000_003)]).unwrap(), vec![b(1_000_003)]);
        assert!(smooth_batch(&ctx, &[b(0)]).is_err());
        assert!(smooth_batch(&ctx, &[]).unwrap().is_empty());
    }

    #[test]
    fn exact_strips_high_powers() {
        let ctx = SmoothnessContext::new(&[2, 3, 5, 7], 2).unwrap();
        let x: BigUint = (BigUint::one() << 100usize) * 11u32;
        assert_eq!(smooth_batch_exact(&ctx, std::slice::from_ref(&x)).unwrap(), vec![b(11)]);
        // boosted η only carries 2^16, so the single-gcd path leaves 2^84·11
        assert_eq!(smooth_batch(&ctx, &[x]).unwrap(), vec![(BigUint::one() << 84) * 11u32]);
        assert_eq!(smooth_batch_exact(&ctx, &[b(49)]).unwrap(), vec![b(1)]);
    }

    #[test]
    fn filter_threshold_formula() {
        let g30 = num_traits::pow(b(10), 30);
        let g36 = num_traits::pow(b(10), 36);
        assert!(below_filter_threshold(&g30, 80, 5));
        assert!(!below_filter_threshold(&g36, 80, 5));
        assert!(!below_filter_threshold(&num_traits::pow(b(10), 35), 80, 5));
        assert!(below_filter_threshold(&b(1), 80, 5));
        assert!(!below_filter_threshold(&b(1), 10, 5));
        // odd digit count: 10^(2.5) ≈ 316.2
        assert!(below_filter_threshold(&b(316), 15, 5));
        assert!(!below_filter_threshold(&b(317), 15, 5));
    }

    #[test]
    fn filter_keeps_smooth_and_drops_large() {
        let primes = primes_below(200);
        let ctx = SmoothnessContext::new(&primes, 10).unwrap();
        let (f1, _) = ctx.partition();
        assert_eq!(f1.primes().len(), primes.len() / 10);
        let smooth = b(2 * 3 * 5 * 7 * 199 * 197);
        let big_prime = b(1_000_000_007) * b(998_244_353);
        let out = smooth_filter(&ctx, &[smooth, big_prime], 20, 5).unwrap();
        assert_eq!(out.considered, 2);
        assert_eq!(out.residuals, vec![(0, b(1))]);
        assert_eq!(out.discarded(), 1);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&b(1), 1000, 128), Class::Full);
        assert_eq!(classify(&b(127_999), 1000, 128), Class::Partial(b(127_999)));
        assert_eq!(classify(&b(128_000), 1000, 128), Class::Reject);
        assert_eq!(classify(&b(5), 1000, 0), Class::Reject);
    }

    #[test]
    fn context_rejects_bad_rho() {
        assert!(SmoothnessContext::new(&[2, 3], 1).is_err());
    }

    proptest! {
        #[test]
        fn exact_matches_trial_division(xs in proptest::collection::vec(1u64..1_000_000_000_000, 1..200)) {
            let primes = primes_below(1000);
            let ctx = SmoothnessContext::new(&primes, 10).unwrap();
            let c: Vec<BigUint> = xs.iter().map(|&x| b(x)).collect();
            let exact = smooth_batch_exact(&ctx, &c).unwrap();
            let boosted = smooth_batch(&ctx, &c).unwrap();
            for ((x, e), g) in xs.iter().zip(exact).zip(boosted) {
                let oracle = trial_residual(*x, &primes);
                prop_assert_eq!(e, b(oracle));
                if g.is_one() {
                    prop_assert_eq!(oracle, 1);
                }
            }
        }
    }
}
