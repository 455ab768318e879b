use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use sss_core::{Algo, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "sss", version, about = "Integer factorization by smooth subsum search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factor N completely and print the prime factors.
    Factor(FactorArgs),
    /// Time the algorithms on random balanced semiprimes.
    Bench(BenchArgs),
    /// Collect relations for N and write them as CSV, skipping the second phase.
    Relations(RelationsArgs),
}

pub fn parse_biguint(s: &str) -> Result<BigUint, String> {
    let t = s.trim();
    if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("{s:?} is not a non-negative decimal integer"));
    }
    t.parse().map_err(|_| format!("{s:?} is not a decimal integer"))
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: sss_core::Error| e.to_string())
}

/// Search settings shared by every subcommand. Unset flags fall back to the
/// `--config` file and then to the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchOpts {
    /// JSON run configuration, as echoed by `factor --json`.
    #[arg(long, env = "SSS_CONFIG")]
    pub config: Option<PathBuf>,
    /// sss, sssf or qs; the default picks sssf from 75 digits on.
    #[arg(long, env = "SSS_ALGO", value_parser = parse_algo)]
    pub algo: Option<Algo>,
    /// Factor base size before the quadratic-residue filter.
    #[arg(long, env = "SSS_M")]
    pub m: Option<usize>,
    /// Small factor base size.
    #[arg(long, env = "SSS_N")]
    pub n: Option<usize>,
    /// Small primes per subsum.
    #[arg(long, env = "SSS_K")]
    pub k: Option<usize>,
    /// Sieve-filter split: the first |F|/rho primes form the first pass.
    #[arg(long, env = "SSS_RHO")]
    pub rho: Option<usize>,
    /// Sieve-filter slack in decimal digits.
    #[arg(long, env = "SSS_DELTA")]
    pub delta: Option<u32>,
    /// Partial-relation cofactor bound as a multiple of the largest prime; 0 disables partials.
    #[arg(long, env = "SSS_PARTIAL_MULTIPLIER")]
    pub partial_multiplier: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, env = "SSS_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, env = "SSS_SEED")]
    pub seed: Option<u64>,
    /// Search rounds allowed per split.
    #[arg(long, env = "SSS_MAX_ROUNDS")]
    pub max_rounds: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long, env = "SSS_TIME_LIMIT")]
    pub time_limit: Option<f64>,
    /// Use exact batch smoothness instead of the boosted single-gcd test.
    #[arg(long, env = "SSS_EXACT")]
    pub exact: bool,
}

impl SearchOpts {
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                config_from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if self.algo.is_some() {
            c.algo = self.algo;
        }
        if self.m.is_some() {
            c.m = self.m;
        }
        if self.n.is_some() {
            c.n = self.n;
        }
        if self.k.is_some() {
            c.k = self.k;
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = self.partial_multiplier {
            c.partial_bound_multiplier = v;
        }
        if let Some(v) = self.threads {
            c.threads = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.max_rounds {
            c.max_rounds = v;
        }
        if self.time_limit.is_some() {
            c.time_limit_seconds = self.time_limit;
        }
        if self.exact {
            c.exact_smoothness = true;
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

/// Accepts a bare `RunConfig` object or a report with a `config` field.
pub fn config_from_json(text: &str) -> Result<RunConfig, String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid config JSON: {e}"))?;
    let inner = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| format!("invalid config: {e}"))
}

#[derive(Debug, Clone, Args)]
pub struct FactorArgs {
    #[arg(value_parser = parse_biguint)]
    pub number: BigUint,
    /// Print a JSON report instead of one factor per line.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub search: SearchOpts,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated digit counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub digits: Vec<usize>,
    /// Semiprimes per digit count.
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_algo, default_value = "sss,qs")]
    pub algos: Vec<Algo>,
    /// Per-run budget; runs that hit it report relation counts instead of times.
    #[arg(long)]
    pub timeout_seconds: Option<f64>,
    /// JSON report path; the CSV summary goes next to it with a .csv extension.
    #[arg(long, default_value = "bench_report.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchOpts,
}

#[derive(Debug, Clone, Args)]
pub struct RelationsArgs {
    #[arg(value_parser = parse_biguint)]
    pub number: BigUint,
    /// Stop after this many search rounds.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write unmatched partial relations to this file.
    #[arg(long)]
    pub partials: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchOpts,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let opts = SearchOpts { seed: Some(9), k: Some(4), ..SearchOpts::default() };
        let c = opts.resolve().unwrap();
        assert_eq!((c.seed, c.k), (9, Some(4)));
        assert_eq!(c.rho, RunConfig::default().rho);
    }

    #[test]
    fn biguint_parser() {
        assert_eq!(parse_biguint("8051").unwrap(), BigUint::from(8051u32));
        assert!(parse_biguint("-5").is_err());
        assert!(parse_biguint("12a").is_err());
        assert!(parse_biguint("").is_err());
    }

    #[test]
    fn config_json_nested_or_bare() {
        let c = RunConfig { seed: 5, ..RunConfig::default() };
        let bare = serde_json::to_string(&c).unwrap();
        assert_eq!(config_from_json(&bare).unwrap(), c);
        let nested = format!("{{\"config\": {bare}}}");
        assert_eq!(config_from_json(&nested).unwrap(), c);
    }
}
