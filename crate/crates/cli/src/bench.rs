use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::{BigUint, RandBigInt};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sss_core::numtheory::{decimal_digits, is_probable_prime};
use sss_core::{factor, Algo, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_DIGITS: usize = 4;

/// Smallest probable prime ≥ `from`.
fn next_prime(from: BigUint) -> BigUint {
    let mut p = from;
    if (&p % 2u32) == BigUint::from(0u32) {
        p += 1u32;
    }
    while !is_probable_prime(&p) {
        p += 2u32;
    }
    p
}

fn random_prime<R: Rng>(digits: usize, rng: &mut R) -> BigUint {
    let lo = BigUint::from(10u32).pow(digits as u32 - 1);
    let hi = &lo * 10u32;
    loop {
        let p = next_prime(rng.gen_biguint_range(&lo, &hi));
        if p < hi {
            return p;
        }
    }
}

/// A semiprime with exactly `digits` digits whose factors have ⌈d/2⌉ and
/// ⌊d/2⌋ digits. Returns the product and both primes (smaller first).
pub fn balanced_semiprime<R: Rng>(digits: usize, rng: &mut R) -> Result<(BigUint, BigUint, BigUint), String> {
    if digits < MIN_DIGITS {
        return Err(format!("cannot build a balanced odd semiprime with {digits} digits (minimum {MIN_DIGITS})"));
    }
    let (hi, lo) = (digits.div_ceil(2), digits / 2);
    loop {
        let p = random_prime(hi, rng);
        let q = random_prime(lo, rng);
        let n = &p * &q;
        if p != q && decimal_digits(&n) == digits {
            return Ok(if p < q { (n, p, q) } else { (n, q, p) });
        }
    }
}

/// The inputs for one bench invocation, in run order: (digits, N, run seed).
pub fn bench_inputs(digits: &[usize], count: usize, seed: u64) -> Result<Vec<(usize, BigUint, u64)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &d in digits {
        for _ in 0..count {
            let (n, _, _) = balanced_semiprime(d, &mut rng)?;
            out.push((d, n, rng.next_u64()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: String,
    pub digits: usize,
    pub algo: Algo,
    pub seed: u64,
    /// Whether the run factored N before the budget ran out.
    pub completed: bool,
    pub factors: Vec<String>,
    pub wall_seconds: f64,
    pub setup_seconds: f64,
    pub collection_seconds: f64,
    pub linear_algebra_seconds: f64,
    pub rounds: u64,
    pub candidates: u64,
    pub fulls: u64,
    pub native_fulls: u64,
    pub partials: u64,
    pub combined: u64,
    pub filter_considered: u64,
    pub filter_kept: u64,
    pub config: RunConfig,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub digits: usize,
    pub algo: Algo,
    pub runs: usize,
    pub completed: usize,
    /// Over completed runs.
    pub mean_seconds: Option<f64>,
    pub std_seconds: Option<f64>,
    pub median_seconds: Option<f64>,
    /// Over all runs; the comparable figure when runs time out.
    pub mean_relations: f64,
    pub std_relations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    pub digits: Vec<usize>,
    pub count: usize,
    pub algos: Vec<Algo>,
    pub timeout_seconds: Option<f64>,
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Mean and sample standard deviation; `None` on an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

pub fn run_one(n: &BigUint, digits: usize, algo: Algo, config: &RunConfig) -> BenchRecord {
    let config = RunConfig { algo: Some(algo), ..config.clone() };
    let t0 = Instant::now();
    let result = factor(n, &config);
    let wall = t0.elapsed().as_secs_f64();
    let mut rec = BenchRecord {
        n: n.to_string(),
        digits,
        algo,
        seed: config.seed,
        completed: false,
        factors: Vec::new(),
        wall_seconds: wall,
        setup_seconds: 0.0,
        collection_seconds: 0.0,
        linear_algebra_seconds: 0.0,
        rounds: 0,
        candidates: 0,
        fulls: 0,
        native_fulls: 0,
        partials: 0,
        combined: 0,
        filter_considered: 0,
        filter_kept: 0,
        config,
        error: None,
    };
    match result {
        Ok(r) => {
            rec.completed = r.is_complete();
            rec.factors = r
                .factors
                .iter()
                .flat_map(|(p, e)| std::iter::repeat_n(p.to_string(), *e as usize))
                .collect();
            let s = &r.stats;
            rec.setup_seconds = s.setup_seconds;
            rec.collection_seconds = s.collection_seconds;
            rec.linear_algebra_seconds = s.linear_algebra_seconds;
            rec.rounds = s.rounds;
            rec.candidates = s.candidates;
            rec.fulls = s.fulls;
            rec.native_fulls = s.native_fulls;
            rec.partials = s.partials;
            rec.combined = s.combined;
            rec.filter_considered = s.filter_considered;
            rec.filter_kept = s.filter_kept;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, String), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.digits, r.algo.name().to_string())).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let times: Vec<f64> = rs.iter().filter(|r| r.completed).map(|r| r.wall_seconds).collect();
            let rels: Vec<f64> = rs.iter().map(|r| r.fulls as f64).collect();
            let (mean_t, std_t) = mean_std(&times).unzip();
            let (mean_r, std_r) = mean_std(&rels).unwrap_or((0.0, 0.0));
            SummaryRow {
                digits: rs[0].digits,
                algo: rs[0].algo,
                runs: rs.len(),
                completed: times.len(),
                mean_seconds: mean_t,
                std_seconds: std_t,
                median_seconds: median(&times),
                mean_relations: mean_r,
                std_relations: std_r,
            }
        })
        .collect()
}

pub fn csv_path(json_path: &Path) -> PathBuf {
    json_path.with_extension("csv")
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "digits",
        "algo",
        "runs",
        "completed",
        "mean_seconds",
        "std_seconds",
        "median_seconds",
        "mean_relations",
        "std_relations",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        out.write_record([
            r.digits.to_string(),
            r.algo.name().to_string(),
            r.runs.to_string(),
            r.completed.to_string(),
            opt(r.mean_seconds),
            opt(r.std_seconds),
            opt(r.median_seconds),
            format!("{:.3}", r.mean_relations),
            format!("{:.3}", r.std_relations),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semiprimes_have_exact_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [4, 5, 10, 17, 30] {
            let (n, p, q) = balanced_semiprime(d, &mut rng).unwrap();
            assert_eq!(decimal_digits(&n), d);
            assert_eq!(&p * &q, n);
            assert!(p < q && is_probable_prime(&p) && is_probable_prime(&q));
            assert_eq!(decimal_digits(&q), d.div_ceil(2));
        }
        assert!(balanced_semiprime(3, &mut rng).is_err());
    }

    #[test]
    fn inputs_are_seed_determined() {
        let a = bench_inputs(&[20, 22], 3, 7).unwrap();
        assert_eq!(a, bench_inputs(&[20, 22], 3, 7).unwrap());
        assert_ne!(a, bench_inputs(&[20, 22], 3, 8).unwrap());
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn statistics() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(mean_std(&[]), None);
    }
}
