//! The subsum search: pick k small primes, fix x modulo their product M via
//! CRT, then look for offsets α at which f(x + α·M/q) is divisible by at
//! least three primes of 𝓕 \ 𝓢 simultaneously.
//!
//! Each prime p of 𝓕 \ 𝓢 contributes the four offsets {α₁, α₁ − p, α₂, α₂ − p}
//! with α_k = q·r_k mod p and r_k = (s_k − x)·M⁻¹ mod p. The two roots are
//! distinct and the two windows [0, p) and [−p, 0) are disjoint, so one
//! offset value gets at most one vote per prime.

use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crt::{get_x, swap_root, CrtPrecomp, Representation};
use crate::error::{Error, Result};
use crate::factorbase::{FactorBase, FbPrime};
use crate::numtheory::{inv_mod_u64, mod_small, mul_mod};
use crate::relations::{split_over_base, PartialRelation, Relation};
use crate::smoothness::{classify, smooth_filter, Class, SmoothnessContext};

/// Which smoothness test runs on each candidate batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMode {
    /// Single gcd against the boosted η.
    Batch,
    /// Repeated squaring before the gcd; matches trial division.
    Exact,
    /// Two-stage 𝓕₁/𝓕₂ filter discarding candidates whose 𝓕₁ residual is
    /// not below 10^(d/2 − δ).
    Filter { delta: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub k: usize,
    pub collision_threshold: usize,
    /// Partials kept when 1 < g < multiplier·p_m; 0 disables them.
    pub partial_multiplier: u64,
    pub mode: SmoothMode,
    /// Candidates accumulated across inner iterations before a smoothness
    /// pass; 0 runs one pass per inner iteration.
    pub min_batch: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            k: 6,
            collision_threshold: 3,
            partial_multiplier: 128,
            mode: SmoothMode::Batch,
            min_batch: 0,
        }
    }
}

/// Transformed roots (p, r₁, r₂) for every p in 𝓕 \ 𝓢.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootTransforms {
    pub entries: Vec<(u64, u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionHit {
    pub alpha: i64,
    pub count: usize,
    pub x_bar: BigInt,
    pub m_prime: BigInt,
}

/// k distinct indices from 0..n in ascending order.
pub fn pick_indices<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot pick {k} of {n} indices")));
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// μ_p = M⁻¹ mod p for every p of `large`.
pub fn invert_modulus(modulus: &BigInt, large: &[FbPrime]) -> Result<Vec<u64>> {
    large
        .iter()
        .map(|q| {
            inv_mod_u64(mod_small(modulus, q.p), q.p).ok_or_else(|| Error::Internal(format!(
                "modulus shares the factor-base prime {}",
                q.p
            )))
        })
        .collect()
}

/// r_k = (s_k − x)·μ_p mod p.
pub fn root_transforms(x: &BigInt, inverses: &[u64], large: &[FbPrime]) -> RootTransforms {
    let entries = large
        .iter()
        .zip(inverses)
        .map(|(q, &mu)| {
            let p = q.p;
            let xm = mod_small(x, p);
            let r1 = mul_mod((q.roots.0 + p - xm) % p, mu, p);
            let r2 = mul_mod((q.roots.1 + p - xm) % p, mu, p);
            (p, r1, r2)
        })
        .collect();
    RootTransforms { entries }
}

/// Offsets α appearing at least `threshold` times in
/// 𝓚 = {q·r_k mod p, q·r_k mod p − p}, with x̄ = x + α·(M/q). `q = 1`
/// scans the base pair (x, M) itself.
pub fn collision_scan(
    transforms: &RootTransforms,
    q: u64,
    modulus: &BigInt,
    x: &BigInt,
    threshold: usize,
) -> Result<Vec<CollisionHit>> {
    if q == 0 || mod_small(modulus, q) != 0 {
        return Err(Error::InvalidArgument(format!("{q} does not divide the modulus")));
    }
    let mut offsets = Vec::with_capacity(4 * transforms.entries.len());
    for &(p, r1, r2) in &transforms.entries {
        for r in [r1, r2] {
            let a = mul_mod(q % p, r, p) as i64;
            offsets.push(a);
            offsets.push(a - p as i64);
        }
    }
    let m_prime = modulus / q;
    Ok(count_repeats(&mut offsets, threshold)
        .into_iter()
        .map(|(alpha, count)| CollisionHit {
            alpha,
            count,
            x_bar: x + &m_prime * alpha,
            m_prime: m_prime.clone(),
        })
        .collect())
}

/// Values occurring at least `threshold` times, ascending, with counts.
pub fn count_repeats(values: &mut [i64], threshold: usize) -> Vec<(i64, usize)> {
    values.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        if j - i >= threshold {
            out.push((values[i], j - i));
        }
        i = j;
    }
    out
}

/// Receives relations as a round produces them.
pub trait RelationSink {
    fn full(&mut self, rel: Relation);
    fn partial(&mut self, rel: PartialRelation);
}

/// Counters for one search round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub candidates: u64,
    pub fulls: u64,
    pub partials: u64,
    /// Candidates entering the 𝓕₁ stage of the filter.
    pub filter_considered: u64,
    /// Candidates surviving to the 𝓕₂ stage.
    pub filter_kept: u64,
}

impl RoundStats {
    pub fn absorb(&mut self, other: &RoundStats) {
        self.candidates += other.candidates;
        self.fulls += other.fulls;
        self.partials += other.partials;
        self.filter_considered += other.filter_considered;
        self.filter_kept += other.filter_kept;
    }
}

/// Relations and counters of one round, in emission order.
#[derive(Debug, Clone, Default)]
pub struct RoundOutput {
    pub fulls: Vec<Relation>,
    pub partials: Vec<PartialRelation>,
    pub stats: RoundStats,
}

impl RelationSink for RoundOutput {
    fn full(&mut self, rel: Relation) {
        self.fulls.push(rel);
    }

    fn partial(&mut self, rel: PartialRelation) {
        self.partials.push(rel);
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    x_bar: BigInt,
    value: BigInt,
}

/// Immutable per-N state shared by all search rounds.
#[derive(Debug, Clone)]
pub struct Searcher {
    fb: FactorBase,
    pre: CrtPrecomp,
    smooth: SmoothnessContext,
    params: SearchParams,
    digits: usize,
    n_unsigned: BigUint,
}

impl Searcher {
    pub fn new(fb: FactorBase, rho: usize, params: SearchParams) -> Result<Self> {
        if params.k == 0 || params.k > fb.small().len() {
            return Err(Error::InvalidArgument(format!(
                "k = {} must lie in 1..={}",
                params.k,
                fb.small().len()
            )));
        }
        if params.collision_threshold < 2 {
            return Err(Error::InvalidArgument("collision threshold must be at least 2".into()));
        }
        let pre = CrtPrecomp::new(fb.small())?;
        let smooth = SmoothnessContext::new(fb.primes(), rho)?;
        let n_unsigned = fb.n().magnitude().clone();
        let digits = n_unsigned.to_str_radix(10).len();
        Ok(Searcher {
            fb,
            pre,
            smooth,
            params,
            digits,
            n_unsigned,
        })
    }

    pub fn factor_base(&self) -> &FactorBase {
        &self.fb
    }

    pub fn precomp(&self) -> &CrtPrecomp {
        &self.pre
    }

    pub fn smoothness(&self) -> &SmoothnessContext {
        &self.smooth
    }

    pub fn params(&self) -> &SearchParams {
        &self.params
    }

    pub fn partial_bound(&self) -> BigUint {
        BigUint::from(self.params.partial_multiplier as u128 * self.fb.largest() as u128)
    }

    /// One full outer loop of the search.
    pub fn search_round<R: Rng + ?Sized, S: RelationSink>(
        &self,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<RoundStats> {
        let mut stats = RoundStats::default();
        let small = self.fb.small();
        let large = self.fb.large();
        let indices = pick_indices(self.params.k, small.len(), rng)?;
        let factors: Vec<u64> = indices.iter().map(|&i| small[i].p).collect();
        let modulus: BigInt = factors.iter().map(|&p| BigInt::from(p)).product();
        let inverses = invert_modulus(&modulus, large)?;
        let mut x = get_x(&Representation::ones(small.len(), &indices), &self.pre)?.x;

        let mut pending: Vec<Candidate> = Vec::new();
        let mut seen: HashSet<BigInt> = HashSet::new();
        for (pos, &i) in indices.iter().enumerate() {
            x = swap_root(&x, i, 1, &modulus, &self.pre)?;
            let transforms = root_transforms(&x, &inverses, large);
            let mut hits = collision_scan(&transforms, 1, &modulus, &x, self.params.collision_threshold)?;
            for &q in &factors {
                if q == small[i].p {
                    continue;
                }
                hits.extend(collision_scan(&transforms, q, &modulus, &x, self.params.collision_threshold)?);
            }
            for hit in hits {
                if !seen.insert(hit.x_bar.clone()) {
                    continue;
                }
                let fx = self.fb.eval(&hit.x_bar);
                let (value, rem) = fx.div_rem(&hit.m_prime);
                if !rem.is_zero() {
                    return Err(Error::Internal(format!(
                        "m' = {} does not divide f({})",
                        hit.m_prime, hit.x_bar
                    )));
                }
                pending.push(Candidate { x_bar: hit.x_bar, value });
            }
            let last = pos + 1 == indices.len();
            if !pending.is_empty() && (last || pending.len() >= self.params.min_batch) {
                self.test_batch(std::mem::take(&mut pending), sink, &mut stats)?;
            }
        }
        Ok(stats)
    }

    fn test_batch<S: RelationSink>(
        &self,
        batch: Vec<Candidate>,
        sink: &mut S,
        stats: &mut RoundStats,
    ) -> Result<()> {
        stats.candidates += batch.len() as u64;
        let magnitudes: Vec<BigUint> = batch.iter().map(|c| c.value.magnitude().clone()).collect();
        let residuals: Vec<(usize, BigUint)> = match self.params.mode {
            SmoothMode::Batch => self.smooth.full().residuals(&magnitudes)?.into_iter().enumerate().collect(),
            SmoothMode::Exact => self
                .smooth
                .full()
                .residuals_exact(&magnitudes)?
                .into_iter()
                .enumerate()
                .collect(),
            SmoothMode::Filter { delta } => {
                let filtered = smooth_filter(&self.smooth, &magnitudes, self.digits, delta)?;
                stats.filter_considered += filtered.considered as u64;
                stats.filter_kept += filtered.residuals.len() as u64;
                filtered.residuals
            }
        };
        let p_m = self.fb.largest();
        for (idx, g) in residuals {
            let class = classify(&g, p_m, self.params.partial_multiplier);
            if class == Class::Reject {
                continue;
            }
            let cand = &batch[idx];
            let fx = self.fb.eval(&cand.x_bar);
            let (exponents, cofactor) = split_over_base(&fx, self.fb.primes())?;
            let root = (&cand.x_bar + self.fb.sqrt_ceil()).mod_floor(self.fb.n());
            let x = root.magnitude().clone();
            if cofactor.is_one() {
                stats.fulls += 1;
                sink.full(Relation { x, exponents });
            } else if class != Class::Full {
                if cofactor.gcd(&self.n_unsigned) != BigUint::one() {
                    return Err(Error::FoundFactor(cofactor.gcd(&self.n_unsigned)));
                }
                stats.partials += 1;
                sink.partial(PartialRelation { x, cofactor, exponents });
            } else {
                return Err(Error::Internal(format!(
                    "residual 1 reported for non-smooth f({})",
                    cand.x_bar
                )));
            }
        }
        Ok(())
    }
}
