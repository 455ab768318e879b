//! Single-polynomial quadratic sieve over f(x) = (x + ⌈√N⌉)² − N, used as
//! the benchmark baseline. Intervals of length L are sieved outward from
//! x = 0, alternating sides: [0, L), [−L, 0), [L, 2L), …

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::factorbase::FactorBase;
use crate::numtheory::{inv_mod_u64, mod_small, mul_mod, tonelli_shanks};
use crate::relations::{split_over_base, PartialRelation, Relation};
use crate::search::{RelationSink, RoundOutput, RoundStats};

pub const DEFAULT_INTERVAL: usize = 65536;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SieveEntry {
    modulus: u64,
    roots: (u64, u64),
    log: u8,
}

/// Sieving data for one factor base: every prime with its roots, and the
/// squares p² ≤ L of odd primes with lifted roots.
#[derive(Debug, Clone)]
pub struct QsSieve {
    fb: FactorBase,
    entries: Vec<SieveEntry>,
    interval: usize,
    partial_multiplier: u64,
    n_unsigned: BigUint,
}

fn ceil_log2(v: u64) -> u8 {
    (64 - (v - 1).leading_zeros()) as u8
}

impl QsSieve {
    pub fn new(fb: FactorBase, interval: usize, partial_multiplier: u64) -> Result<Self> {
        if interval == 0 {
            return Err(Error::InvalidArgument("sieve interval must be positive".into()));
        }
        let c2 = mod_small(fb.sqrt_ceil(), 2);
        let mut entries = vec![SieveEntry {
            modulus: 2,
            roots: ((c2 + 1) % 2, (c2 + 1) % 2),
            log: 1,
        }];
        for q in fb.odd() {
            let log = ceil_log2(q.p);
            entries.push(SieveEntry { modulus: q.p, roots: q.roots, log });
            let pp = q.p * q.p;
            if pp as usize <= interval {
                let n_mod = mod_small(fb.n(), pp);
                let t = tonelli_shanks(n_mod % q.p, q.p)?;
                // Hensel: t' = t − (t² − N)·(2t)⁻¹ mod p²
                let inv = inv_mod_u64(2 * t % pp, pp).ok_or_else(|| {
                    Error::Internal(format!("cannot lift root modulo {}²", q.p))
                })?;
                let excess = (mul_mod(t, t, pp) + pp - n_mod) % pp;
                let lifted = (t + pp - mul_mod(excess, inv, pp)) % pp;
                let c = mod_small(fb.sqrt_ceil(), pp);
                entries.push(SieveEntry {
                    modulus: pp,
                    roots: ((lifted + pp - c) % pp, (2 * pp - lifted - c) % pp),
                    log,
                });
            }
        }
        let n_unsigned = fb.n().magnitude().clone();
        Ok(QsSieve { fb, entries, interval, partial_multiplier, n_unsigned })
    }

    pub fn factor_base(&self) -> &FactorBase {
        &self.fb
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    /// Start of the `index`-th interval in the outward alternating order.
    pub fn interval_start(&self, index: u64) -> i64 {
        let l = self.interval as i64;
        let k = (index / 2) as i64;
        if index.is_multiple_of(2) {
            k * l
        } else {
            -(k + 1) * l
        }
    }

    /// ⌈log₂|f(mid)|⌉ − ⌈log₂(multiplier·p_m)⌉, clamped to a byte.
    pub fn threshold(&self, start: i64, len: usize) -> u8 {
        let mid = BigInt::from(start + len as i64 / 2);
        let fmid = self.fb.eval(&mid).abs().max(BigInt::one());
        let bits = fmid.bits() as i64;
        let slack_base = (self.partial_multiplier.max(1) as u128 * self.fb.largest() as u128) as u64;
        let slack = ceil_log2(slack_base.max(2)) as i64;
        (bits - slack).clamp(0, 255) as u8
    }

    /// Every x in [start, start + len) whose accumulated ⌈log₂ p⌉ sum
    /// reaches `threshold`.
    pub fn sieve_interval(&self, start: i64, len: usize, threshold: u8) -> Vec<i64> {
        let logs = self.sieve_logs(start, len);
        logs.iter()
            .enumerate()
            .filter(|(_, &v)| v >= threshold)
            .map(|(i, _)| start + i as i64)
            .collect()
    }

    pub fn sieve_logs(&self, start: i64, len: usize) -> Vec<u8> {
        let mut logs = vec![0u8; len];
        for e in &self.entries {
            let m = e.modulus as i64;
            let mut hit = |root: u64| {
                let mut i = (root as i64 - start).rem_euclid(m) as usize;
                while i < len {
                    logs[i] = logs[i].saturating_add(e.log);
                    i += e.modulus as usize;
                }
            };
            hit(e.roots.0);
            if e.roots.1 != e.roots.0 {
                hit(e.roots.1);
            }
        }
        logs
    }

    /// Sieves interval `index` and turns its candidates into relations.
    pub fn collect_interval<S: RelationSink>(&self, index: u64, sink: &mut S) -> Result<RoundStats> {
        let start = self.interval_start(index);
        let threshold = self.threshold(start, self.interval);
        let bound = BigUint::from(self.partial_multiplier as u128 * self.fb.largest() as u128);
        let mut stats = RoundStats::default();
        for x in self.sieve_interval(start, self.interval, threshold) {
            stats.candidates += 1;
            let xb = BigInt::from(x);
            let fx = self.fb.eval(&xb);
            let (exponents, cofactor) = split_over_base(&fx, self.fb.primes())?;
            let root = (&xb + self.fb.sqrt_ceil()).mod_floor(self.fb.n()).magnitude().clone();
            if cofactor.is_one() {
                stats.fulls += 1;
                sink.full(Relation { x: root, exponents });
            } else if cofactor < bound {
                let g = cofactor.gcd(&self.n_unsigned);
                if !g.is_one() {
                    return Err(Error::FoundFactor(g));
                }
                stats.partials += 1;
                sink.partial(PartialRelation { x: root, cofactor, exponents });
            }
        }
        Ok(stats)
    }

    pub fn produce(&self, index: u64) -> Result<RoundOutput> {
        let mut out = RoundOutput::default();
        out.stats = self.collect_interval(index, &mut out)?;
        Ok(out)
    }
}
