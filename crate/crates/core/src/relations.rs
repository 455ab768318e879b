//! Relation bookkeeping and the second phase: exponent vectors, large-prime
//! combination, F₂ dependencies and the final congruence of squares.
//!
//! Exponent vectors are dense with one slot per entry of {−1} ∪ 𝓕: slot 0
//! holds the sign, slot `j + 1` the exponent of `primes[j]`.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{null_space, BitRow};
use crate::numtheory::{mod_inverse, mod_small_unsigned};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    /// x with x² ≡ (−1)^e₀·∏ p^e mod N, reduced into [0, N).
    pub x: BigUint,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRelation {
    pub x: BigUint,
    /// The non-smooth cofactor r: x² ≡ (−1)^e₀·∏ p^e · r mod N.
    pub cofactor: BigUint,
    pub exponents: Vec<u32>,
}

/// Splits `y` into its exponent vector over {−1} ∪ `primes` and the
/// remaining cofactor.
pub fn split_over_base(y: &BigInt, primes: &[u64]) -> Result<(Vec<u32>, BigUint)> {
    if y.is_zero() {
        return Err(Error::InvalidArgument("cannot factor zero".into()));
    }
    let mut exps = vec![0u32; primes.len() + 1];
    exps[0] = u32::from(y.sign() == Sign::Minus);
    let mut rest = y.magnitude().clone();
    for (j, &p) in primes.iter().enumerate() {
        while mod_small_unsigned(&rest, p) == 0 {
            rest /= p;
            exps[j + 1] += 1;
        }
    }
    Ok((exps, rest))
}

/// Exponent vector of a fully smooth `y`.
pub fn factor_over_base(y: &BigInt, primes: &[u64]) -> Result<Vec<u32>> {
    let (exps, rest) = split_over_base(y, primes)?;
    if !rest.is_one() {
        return Err(Error::NotSmooth { cofactor: rest });
    }
    Ok(exps)
}

/// (−1)^e₀·∏ p^e mod N as a residue in [0, N).
fn signed_product_mod(exps: &[u32], primes: &[u64], n: &BigUint) -> BigUint {
    let mut acc = BigUint::one();
    for (j, &e) in exps[1..].iter().enumerate() {
        if e > 0 {
            acc = acc * BigUint::from(primes[j]).modpow(&BigUint::from(e), n) % n;
        }
    }
    if exps[0] % 2 == 1 && !acc.is_zero() {
        acc = n - acc;
    }
    acc
}

pub fn verify_relation(rel: &Relation, primes: &[u64], n: &BigUint) -> bool {
    rel.exponents.len() == primes.len() + 1
        && rel.x.modpow(&BigUint::from(2u32), n) == signed_product_mod(&rel.exponents, primes, n)
}

pub fn verify_partial(rel: &PartialRelation, primes: &[u64], n: &BigUint) -> bool {
    rel.exponents.len() == primes.len() + 1
        && rel.x.modpow(&BigUint::from(2u32), n)
            == signed_product_mod(&rel.exponents, primes, n) * &rel.cofactor % n
}

/// Relations required before the second phase: |𝓕| + 1 sign column + slack.
pub fn needed_count(factor_base_len: usize, slack: usize) -> usize {
    factor_base_len + 1 + slack
}

pub const DEFAULT_SLACK: usize = 10;

/// Full relations keyed by x and partials keyed by cofactor.
#[derive(Debug, Clone)]
pub struct RelationStore {
    n: BigUint,
    primes: Vec<u64>,
    partial_bound: BigUint,
    fulls: Vec<Relation>,
    full_keys: HashSet<BigUint>,
    partials: BTreeMap<BigUint, PartialRelation>,
    partial_keys: HashSet<BigUint>,
    target: usize,
    native: usize,
    combined: usize,
    partials_found: usize,
}

impl RelationStore {
    pub fn new(n: BigUint, primes: Vec<u64>, partial_bound: BigUint, target: usize) -> Self {
        RelationStore {
            n,
            primes,
            partial_bound,
            fulls: Vec::new(),
            full_keys: HashSet::new(),
            partials: BTreeMap::new(),
            partial_keys: HashSet::new(),
            target,
            native: 0,
            combined: 0,
            partials_found: 0,
        }
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn fulls(&self) -> &[Relation] {
        &self.fulls
    }

    pub fn partials(&self) -> impl Iterator<Item = &PartialRelation> {
        self.partials.values()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn set_target(&mut self, target: usize) {
        self.target = target;
    }

    pub fn is_complete(&self) -> bool {
        self.fulls.len() >= self.target
    }

    /// Fulls found directly by the search.
    pub fn native_count(&self) -> usize {
        self.native
    }

    /// Fulls produced by pairing partials.
    pub fn combined_count(&self) -> usize {
        self.combined
    }

    /// Distinct partials delivered, paired or not.
    pub fn partials_found(&self) -> usize {
        self.partials_found
    }

    fn push_full(&mut self, rel: Relation) -> Result<bool> {
        if !verify_relation(&rel, &self.primes, &self.n) {
            return Err(Error::Internal(format!("relation for x = {} does not verify", rel.x)));
        }
        if !self.full_keys.insert(rel.x.clone()) {
            return Ok(false);
        }
        self.fulls.push(rel);
        Ok(true)
    }

    /// Adds a freshly found full relation; duplicates by x are ignored.
    pub fn insert_full(&mut self, rel: Relation) -> Result<bool> {
        let fresh = self.push_full(rel)?;
        if fresh {
            self.native += 1;
        }
        Ok(fresh)
    }

    /// Stores a partial, or pairs it with an earlier one sharing the
    /// cofactor. A cofactor sharing a factor with N is surfaced as
    /// [`Error::FoundFactor`].
    pub fn add_partial_and_combine(&mut self, rel: PartialRelation) -> Result<Option<Relation>> {
        if rel.cofactor <= BigUint::one() || rel.cofactor >= self.partial_bound {
            return Err(Error::InvalidArgument(format!(
                "cofactor {} outside (1, {})",
                rel.cofactor, self.partial_bound
            )));
        }
        let g = rel.cofactor.gcd(&self.n);
        if !g.is_one() && g != self.n {
            return Err(Error::FoundFactor(g));
        }
        if !verify_partial(&rel, &self.primes, &self.n) {
            return Err(Error::Internal(format!("partial for x = {} does not verify", rel.x)));
        }
        if !self.partial_keys.insert(rel.x.clone()) {
            return Ok(None);
        }
        self.partials_found += 1;
        let Some(first) = self.partials.get(&rel.cofactor) else {
            self.partials.insert(rel.cofactor.clone(), rel);
            return Ok(None);
        };
        let n = BigInt::from(self.n.clone());
        let r_inv = mod_inverse(&BigInt::from(rel.cofactor.clone()), &n).map_err(|e| match e {
            Error::NotInvertible { gcd } => Error::FoundFactor(gcd.magnitude().clone()),
            other => other,
        })?;
        let x = (&first.x * &rel.x % &self.n) * r_inv.magnitude() % &self.n;
        let exponents = first
            .exponents
            .iter()
            .zip(&rel.exponents)
            .map(|(a, b)| a + b)
            .collect();
        let combined = Relation { x, exponents };
        if self.push_full(combined.clone())? {
            self.combined += 1;
            Ok(Some(combined))
        } else {
            Ok(None)
        }
    }

    /// Header plus one `x,sign,e_…` line per full relation.
    pub fn write_full_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "x,sign")?;
        for p in &self.primes {
            write!(w, ",e_{p}")?;
        }
        writeln!(w)?;
        for rel in &self.fulls {
            write!(w, "{}", rel.x)?;
            for e in &rel.exponents {
                write!(w, ",{e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Header plus one `x,r,sign,e_…` line per stored partial, by cofactor.
    pub fn write_partial_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "x,r,sign")?;
        for p in &self.primes {
            write!(w, ",e_{p}")?;
        }
        writeln!(w)?;
        for rel in self.partials.values() {
            write!(w, "{},{}", rel.x, rel.cofactor)?;
            for e in &rel.exponents {
                write!(w, ",{e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Index subsets of `relations` whose exponent vectors sum to zero mod 2.
pub fn solve_dependencies(relations: &[Relation]) -> Vec<Vec<usize>> {
    let Some(columns) = relations.first().map(|r| r.exponents.len()) else {
        return Vec::new();
    };
    let rows: Vec<BitRow> = relations
        .iter()
        .map(|r| {
            let mut row = BitRow::zeros(columns);
            for (c, e) in r.exponents.iter().enumerate() {
                if e % 2 == 1 {
                    row.set(c);
                }
            }
            row
        })
        .collect();
    null_space(&rows, columns)
}

/// X = ∏ x mod N and Y = ∏ p^(Σe/2) mod N for a dependency.
pub fn assemble_square(
    subset: &[usize],
    relations: &[Relation],
    primes: &[u64],
    n: &BigUint,
) -> Result<(BigUint, BigUint)> {
    let width = primes.len() + 1;
    let mut sums = vec![0u64; width];
    let mut x = BigUint::one();
    for &i in subset {
        let rel = &relations[i];
        x = x * &rel.x % n;
        for (s, &e) in sums.iter_mut().zip(&rel.exponents) {
            *s += e as u64;
        }
    }
    if let Some(c) = sums.iter().position(|s| s % 2 == 1) {
        return Err(Error::Internal(format!("dependency has odd exponent sum at slot {c}")));
    }
    let mut y = BigUint::one();
    for (j, &s) in sums[1..].iter().enumerate() {
        if s > 0 {
            y = y * BigUint::from(primes[j]).modpow(&BigUint::from(s / 2), n) % n;
        }
    }
    if x.modpow(&BigUint::from(2u32), n) != y.modpow(&BigUint::from(2u32), n) {
        return Err(Error::Internal("assembled X² ≢ Y² mod N".into()));
    }
    Ok((x, y))
}

/// gcd(X − Y, N) when it is a proper divisor.
pub fn extract_factor(x: &BigUint, y: &BigUint, n: &BigUint) -> Option<BigUint> {
    let diff = if x >= y { x - y } else { y - x };
    let d = diff.gcd(n);
    (d > BigUint::one() && &d < n).then_some(d)
}

/// Runs the second phase over every dependency until one splits N.
pub fn find_factor(store: &RelationStore) -> Result<Option<BigUint>> {
    let rels = store.fulls();
    for subset in solve_dependencies(rels) {
        let (x, y) = assemble_square(&subset, rels, store.primes(), store.n())?;
        if let Some(d) = extract_factor(&x, &y, store.n()) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}
