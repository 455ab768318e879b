//! Top-level factorization: input validation, trivial structure stripping,
//! relation collection across worker threads, the second phase, and
//! recursion on composite cofactors.
//!
//! Rounds are numbered and each round draws from its own ChaCha stream
//! derived from the master seed, so a batch of rounds can run in parallel
//! and still be merged into the store in round order. The relation set is
//! therefore a function of the configuration alone.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorbase::{build_factor_bases, table_sizes, FactorBase};
use crate::numtheory::{decimal_digits, is_perfect_power, is_probable_prime, primes_below};
use crate::par;
use crate::qs::{QsSieve, DEFAULT_INTERVAL};
use crate::relations::{find_factor, needed_count, RelationStore, DEFAULT_SLACK};
use crate::search::{RoundOutput, RoundStats, SearchParams, Searcher, SmoothMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Sss,
    Sssf,
    Qs,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Sss => "sss",
            Algo::Sssf => "sssf",
            Algo::Qs => "qs",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sss" => Ok(Algo::Sss),
            "sssf" => Ok(Algo::Sssf),
            "qs" => Ok(Algo::Qs),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs with at least this many digits default to SSSf.
pub const SSSF_AUTO_DIGITS: usize = 75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// `None` picks SSS below 75 digits and SSSf from there on.
    pub algo: Option<Algo>,
    /// Factor base size; `None` uses the sizing table.
    pub m: Option<usize>,
    /// Small factor base size; `None` uses the sizing table.
    pub n: Option<usize>,
    /// Primes per subsum; `None` means 6 for SSS and 7 for SSSf.
    pub k: Option<usize>,
    pub rho: usize,
    pub delta: u32,
    /// Partials need a cofactor below this multiple of p_m; 0 disables them.
    pub partial_bound_multiplier: u64,
    pub collision_threshold: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs single-threaded.
    pub threads: usize,
    /// Search rounds (QS: sieve intervals) allowed per split.
    pub max_rounds: u64,
    pub exact_smoothness: bool,
    pub min_batch: usize,
    pub slack: usize,
    pub qs_interval: usize,
    /// Wall-clock budget for the whole call.
    pub time_limit_seconds: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algo: None,
            m: None,
            n: None,
            k: None,
            rho: 10,
            delta: 5,
            partial_bound_multiplier: 128,
            collision_threshold: 3,
            seed: 0,
            threads: 0,
            max_rounds: 10_000_000,
            exact_smoothness: false,
            min_batch: 0,
            slack: DEFAULT_SLACK,
            qs_interval: DEFAULT_INTERVAL,
            time_limit_seconds: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if let (Some(k), Some(n)) = (self.k, self.n) {
            if k > n {
                return bad(format!("k = {k} exceeds n = {n}"));
            }
        }
        if self.m == Some(0) || self.n == Some(0) {
            return bad("factor base sizes must be positive".into());
        }
        if self.rho < 2 {
            return bad(format!("rho = {} must be at least 2", self.rho));
        }
        if self.collision_threshold < 2 {
            return bad("collision threshold must be at least 2".into());
        }
        if self.qs_interval == 0 {
            return bad("qs interval must be positive".into());
        }
        Ok(())
    }

    /// Algorithm used for an input with `digits` decimal digits.
    pub fn algo_for(&self, digits: usize) -> Algo {
        self.algo.unwrap_or(if digits >= SSSF_AUTO_DIGITS { Algo::Sssf } else { Algo::Sss })
    }

    pub fn sizes_for(&self, digits: usize) -> (usize, usize) {
        let (m, n) = table_sizes(digits);
        (self.m.unwrap_or(m), self.n.unwrap_or(n))
    }

    fn search_params(&self, algo: Algo, small_len: usize) -> SearchParams {
        let k = self.k.unwrap_or(if algo == Algo::Sssf { 7 } else { 6 });
        let mode = if algo == Algo::Sssf {
            SmoothMode::Filter { delta: self.delta }
        } else if self.exact_smoothness {
            SmoothMode::Exact
        } else {
            SmoothMode::Batch
        };
        SearchParams {
            k: k.min(small_len),
            collision_threshold: self.collision_threshold,
            partial_multiplier: self.partial_bound_multiplier,
            mode,
            min_batch: self.min_batch,
        }
    }
}

/// Counters accumulated over every split of one `factor` call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub rounds: u64,
    pub candidates: u64,
    /// Fulls in the stores: `native_fulls + combined`.
    pub fulls: u64,
    pub native_fulls: u64,
    pub partials: u64,
    pub combined: u64,
    pub filter_considered: u64,
    pub filter_kept: u64,
    pub dependencies_tried: u64,
    pub splits: u64,
    pub setup_seconds: f64,
    pub collection_seconds: f64,
    pub linear_algebra_seconds: f64,
}

impl Stats {
    fn absorb_store(&mut self, store: &RelationStore) {
        self.native_fulls += store.native_count() as u64;
        self.combined += store.combined_count() as u64;
        self.fulls += store.fulls().len() as u64;
        self.partials += store.partials_found() as u64;
    }

    fn absorb_rounds(&mut self, rounds: u64, rs: &RoundStats) {
        self.rounds += rounds;
        self.candidates += rs.candidates;
        self.filter_considered += rs.filter_considered;
        self.filter_kept += rs.filter_kept;
    }

    /// Share of candidates discarded by the 𝓕₁ stage of the filter.
    pub fn filter_discard_ratio(&self) -> Option<f64> {
        (self.filter_considered > 0)
            .then(|| 1.0 - self.filter_kept as f64 / self.filter_considered as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorResult {
    #[serde(with = "crate::decimal")]
    pub n: BigUint,
    /// Prime factors with multiplicity, ascending.
    #[serde(with = "crate::decimal::pairs")]
    pub factors: Vec<(BigUint, u32)>,
    /// Composite parts left when collection ran out of rounds or time.
    #[serde(with = "crate::decimal::list")]
    pub unfactored: Vec<BigUint>,
    pub stats: Stats,
    pub diagnostics: Vec<String>,
}

impl FactorResult {
    pub fn is_complete(&self) -> bool {
        self.unfactored.is_empty()
    }

    pub fn is_prime_input(&self) -> bool {
        self.factors.len() == 1 && self.factors[0].1 == 1 && self.factors[0].0 == self.n
    }

    /// ∏ pᵉ · ∏ unfactored.
    pub fn product(&self) -> BigUint {
        let mut acc = BigUint::one();
        for (p, e) in &self.factors {
            acc *= num_traits::pow(p.clone(), *e as usize);
        }
        for c in &self.unfactored {
            acc *= c;
        }
        acc
    }
}

/// Relations and counters from a collection run without the second phase.
#[derive(Debug, Clone)]
pub struct Collection {
    pub store: RelationStore,
    pub rounds: u64,
    pub round_stats: RoundStats,
    pub reached_target: bool,
}

enum Source {
    Sss(Box<Searcher>),
    Qs(QsSieve),
}

impl Source {
    fn factor_base(&self) -> &FactorBase {
        match self {
            Source::Sss(s) => s.factor_base(),
            Source::Qs(q) => q.factor_base(),
        }
    }

    fn partial_bound(&self, multiplier: u64) -> BigUint {
        BigUint::from(multiplier as u128 * self.factor_base().largest() as u128)
    }

    fn produce(&self, seed: u64, round: u64) -> Result<RoundOutput> {
        match self {
            Source::Sss(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(round);
                let mut out = RoundOutput::default();
                out.stats = s.search_round(&mut rng, &mut out)?;
                Ok(out)
            }
            Source::Qs(q) => q.produce(round),
        }
    }
}

/// Runs rounds in batches and merges them in round order.
struct Collector<'a> {
    source: &'a Source,
    seed: u64,
    next_round: u64,
    max_rounds: u64,
    deadline: Option<Instant>,
    round_stats: RoundStats,
    use_partials: bool,
}

impl Collector<'_> {
    /// Returns `Ok(true)` once the store reaches its target and `Ok(false)`
    /// when rounds or time ran out first.
    fn fill(&mut self, store: &mut RelationStore) -> Result<bool> {
        let batch = par::effective_threads(0).max(1) as u64;
        while !store.is_complete() {
            if self.next_round >= self.max_rounds
                || self.deadline.is_some_and(|d| Instant::now() >= d)
            {
                return Ok(false);
            }
            let count = batch.min(self.max_rounds - self.next_round);
            let rounds: Vec<u64> = (self.next_round..self.next_round + count).collect();
            let (source, seed) = (self.source, self.seed);
            let outputs = par::map_coarse(rounds, |r| source.produce(seed, r));
            for out in outputs {
                let out = out?;
                self.next_round += 1;
                self.round_stats.absorb(&out.stats);
                for rel in out.fulls {
                    store.insert_full(rel)?;
                }
                if self.use_partials {
                    for rel in out.partials {
                        store.add_partial_and_combine(rel)?;
                    }
                }
                if store.is_complete() {
                    break;
                }
            }
        }
        Ok(true)
    }
}

fn split_seed(seed: u64, split: u64) -> u64 {
    seed ^ split.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn build_source(n: &BigUint, config: &RunConfig) -> Result<Source> {
    let digits = decimal_digits(n);
    let (m, small) = config.sizes_for(digits);
    let fb = build_factor_bases(n, m, small)?;
    let algo = config.algo_for(digits);
    Ok(match algo {
        Algo::Qs => Source::Qs(QsSieve::new(fb, config.qs_interval, config.partial_bound_multiplier)?),
        Algo::Sss | Algo::Sssf => {
            let params = config.search_params(algo, fb.small().len());
            Source::Sss(Box::new(Searcher::new(fb, config.rho, params)?))
        }
    })
}

fn deadline(config: &RunConfig, start: Instant) -> Option<Instant> {
    config
        .time_limit_seconds
        .map(|s| start + Duration::from_secs_f64(s.max(0.0)))
}

/// Collects relations for `n` until the store holds `needed_count(|𝓕|)`
/// fulls or `max_rounds` rounds ran, without the second phase.
pub fn collect_relations(n: &BigUint, config: &RunConfig) -> Result<Collection> {
    config.validate()?;
    par::with_threads(config.threads, || {
        let source = build_source(n, config)?;
        let fb_len = source.factor_base().len();
        let mut store = RelationStore::new(
            n.clone(),
            source.factor_base().primes().to_vec(),
            source.partial_bound(config.partial_bound_multiplier),
            needed_count(fb_len, config.slack),
        );
        let mut collector = Collector {
            source: &source,
            seed: split_seed(config.seed, 0),
            next_round: 0,
            max_rounds: config.max_rounds,
            deadline: deadline(config, Instant::now()),
            round_stats: RoundStats::default(),
            use_partials: config.partial_bound_multiplier > 0,
        };
        let reached_target = collector.fill(&mut store)?;
        Ok(Collection {
            rounds: collector.next_round,
            round_stats: collector.round_stats,
            store,
            reached_target,
        })
    })
}

enum SplitOutcome {
    Divisor(BigUint),
    GaveUp(String),
}

/// One Dixon-style split of an odd composite, non-power `n`.
fn split(
    n: &BigUint,
    config: &RunConfig,
    split_index: u64,
    deadline: Option<Instant>,
    stats: &mut Stats,
) -> Result<SplitOutcome> {
    stats.splits += 1;
    let t0 = Instant::now();
    let source = match build_source(n, config) {
        Err(Error::FoundFactor(d)) => return Ok(SplitOutcome::Divisor(d)),
        other => other?,
    };
    let fb_len = source.factor_base().len();
    let mut store = RelationStore::new(
        n.clone(),
        source.factor_base().primes().to_vec(),
        source.partial_bound(config.partial_bound_multiplier),
        needed_count(fb_len, config.slack),
    );
    stats.setup_seconds += t0.elapsed().as_secs_f64();
    let mut collector = Collector {
        source: &source,
        seed: split_seed(config.seed, split_index),
        next_round: 0,
        max_rounds: config.max_rounds,
        deadline,
        round_stats: RoundStats::default(),
        use_partials: config.partial_bound_multiplier > 0,
    };
    let outcome = loop {
        let t1 = Instant::now();
        let filled = collector.fill(&mut store);
        stats.collection_seconds += t1.elapsed().as_secs_f64();
        match filled {
            Err(Error::FoundFactor(d)) => break SplitOutcome::Divisor(d),
            Err(e) => return Err(e),
            Ok(false) => {
                let rs = &collector.round_stats;
                break SplitOutcome::GaveUp(format!(
                    "gave up on {n} after {} rounds: {} of {} relations, {} candidates tested, acceptance rate {:.3e}",
                    collector.next_round,
                    store.fulls().len(),
                    store.target(),
                    rs.candidates,
                    if rs.candidates > 0 {
                        (rs.fulls + rs.partials) as f64 / rs.candidates as f64
                    } else {
                        0.0
                    }
                ));
            }
            Ok(true) => {}
        }
        let t2 = Instant::now();
        let found = find_factor(&store)?;
        stats.dependencies_tried += 1;
        stats.linear_algebra_seconds += t2.elapsed().as_secs_f64();
        if let Some(d) = found {
            break SplitOutcome::Divisor(d);
        }
        // every dependency was trivial: widen the target and keep collecting
        store.set_target(store.target() + config.slack.max(1));
    };
    stats.absorb_rounds(collector.next_round, &collector.round_stats);
    stats.absorb_store(&store);
    Ok(outcome)
}

const TRIAL_DIVISION_LIMIT: u64 = 1000;

/// Complete factorization of `n` into probable primes.
pub fn factor(n: &BigUint, config: &RunConfig) -> Result<FactorResult> {
    config.validate()?;
    if *n < BigUint::from(2u32) {
        return Err(Error::InvalidInput(format!("{n} has no prime factorization")));
    }
    let start = Instant::now();
    let deadline = deadline(config, start);
    par::with_threads(config.threads, || {
        let mut stats = Stats::default();
        let mut found: BTreeMap<BigUint, u32> = BTreeMap::new();
        let mut unfactored = Vec::new();
        let mut diagnostics = Vec::new();
        let small_primes = primes_below(TRIAL_DIVISION_LIMIT);
        let mut stack: Vec<(BigUint, u32)> = vec![(n.clone(), 1)];
        let mut split_index = 0u64;
        while let Some((c, mult)) = stack.pop() {
            if c.is_one() {
                continue;
            }
            if is_probable_prime(&c) {
                *found.entry(c).or_default() += mult;
                continue;
            }
            if let Some((b, e)) = is_perfect_power(&c) {
                stack.push((b, mult * e));
                continue;
            }
            if let Some(&p) = small_primes.iter().find(|&&p| (&c % p).is_zero()) {
                let mut rest = c;
                let mut e = 0u32;
                while (&rest % p).is_zero() {
                    rest /= p;
                    e += 1;
                }
                *found.entry(BigUint::from(p)).or_default() += mult * e;
                stack.push((rest, mult));
                continue;
            }
            match split(&c, config, split_index, deadline, &mut stats)? {
                SplitOutcome::Divisor(d) => {
                    let (q, r) = c.div_rem(&d);
                    if !r.is_zero() || d.is_one() || d == c {
                        return Err(Error::Internal(format!("bad divisor {d} of {c}")));
                    }
                    stack.push((d, mult));
                    stack.push((q, mult));
                }
                SplitOutcome::GaveUp(msg) => {
                    diagnostics.push(msg);
                    for _ in 0..mult {
                        unfactored.push(c.clone());
                    }
                }
            }
            split_index += 1;
        }
        unfactored.sort();
        let result = FactorResult {
            n: n.clone(),
            factors: found.into_iter().collect(),
            unfactored,
            stats,
            diagnostics,
        };
        if result.product() != *n {
            return Err(Error::Internal(format!("factors of {n} do not multiply back")));
        }
        Ok(result)
    })
}

/// Splits `n` into two nontrivial divisors with the quadratic-sieve
/// baseline.
pub fn qs_factor(n: &BigUint, config: &RunConfig) -> Result<(BigUint, BigUint)> {
    let config = RunConfig { algo: Some(Algo::Qs), ..config.clone() };
    config.validate()?;
    par::with_threads(config.threads, || {
        let mut stats = Stats::default();
        match split(n, &config, 0, deadline(&config, Instant::now()), &mut stats)? {
            SplitOutcome::Divisor(d) => {
                let q = n / &d;
                Ok(if d <= q { (d, q) } else { (q, d) })
            }
            SplitOutcome::GaveUp(msg) => Err(Error::Starved(msg)),
        }
    })
}

/// Decimal digit count, exposed for reporting.
pub fn digits(n: &BigUint) -> usize {
    decimal_digits(n)
}

/// log₁₀ of a positive integer, for reporting.
pub fn log10(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().map(f64::log10).unwrap_or(0.0)
    } else {
        (bits as f64) * std::f64::consts::LOG10_2
    }
}
