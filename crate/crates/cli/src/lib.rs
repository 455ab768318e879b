//! Command-line front end: `factor`, `bench` and `relations`.

pub mod args;
pub mod bench;

use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;
use sss_core::{collect_relations, factor, Error, FactorResult, RunConfig};

pub use args::{BenchArgs, Cli, Command, FactorArgs, RelationsArgs, SearchOpts};
use bench::{bench_inputs, csv_path, run_one, summarize, write_summary_csv, BenchReport, SCHEMA_VERSION};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidInput(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Serialize)]
pub struct FactorReport<'a> {
    pub schema_version: u32,
    pub prime: bool,
    #[serde(flatten)]
    pub result: &'a FactorResult,
    pub config: &'a RunConfig,
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match cli.command {
        Command::Factor(a) => cmd_factor(&a, out, err),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Relations(a) => cmd_relations(&a, out, err),
    }
}

fn resolve(opts: &SearchOpts, err: &mut dyn Write) -> Option<RunConfig> {
    match opts.resolve() {
        Ok(c) => Some(c),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            None
        }
    }
}

pub fn cmd_factor(args: &FactorArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(config) = resolve(&args.search, err) else {
        return EXIT_USAGE;
    };
    let result = match factor(&args.number, &config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_for(&e);
        }
    };
    let written = if args.json {
        let report = FactorReport {
            schema_version: SCHEMA_VERSION,
            prime: result.is_prime_input(),
            result: &result,
            config: &config,
        };
        serde_json::to_writer_pretty(&mut *out, &report)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out))
    } else if result.is_prime_input() {
        writeln!(out, "{} (prime)", result.n)
    } else {
        result.factors.iter().try_for_each(|(p, e)| match e {
            1 => writeln!(out, "{p}"),
            _ => writeln!(out, "{p}^{e}"),
        })
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    for d in &result.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    if result.is_complete() {
        EXIT_OK
    } else {
        if !args.json {
            for c in &result.unfactored {
                let _ = writeln!(err, "unfactored: {c}");
            }
        }
        EXIT_FAILURE
    }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(mut config) = resolve(&args.search, err) else {
        return EXIT_USAGE;
    };
    if args.count == 0 || args.algos.is_empty() {
        let _ = writeln!(err, "error: need a positive --count and at least one algorithm");
        return EXIT_USAGE;
    }
    if args.timeout_seconds.is_some() {
        config.time_limit_seconds = args.timeout_seconds;
    }
    let inputs = match bench_inputs(&args.digits, args.count, config.seed) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut records = Vec::new();
    for (digits, n, seed) in &inputs {
        for &algo in &args.algos {
            let run_config = RunConfig { seed: *seed, ..config.clone() };
            let rec = run_one(n, *digits, algo, &run_config);
            let _ = writeln!(
                err,
                "{digits:>3} digits  {:<4}  {:>9.3}s  {}  fulls={} combined={}",
                algo.name(),
                rec.wall_seconds,
                if rec.completed { "factored" } else { "stopped " },
                rec.fulls,
                rec.combined
            );
            records.push(rec);
        }
    }
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        digits: args.digits.clone(),
        count: args.count,
        algos: args.algos.clone(),
        timeout_seconds: args.timeout_seconds,
        summary: summarize(&records),
        records,
    };
    let csv = csv_path(&args.out);
    let written = File::create(&args.out)
        .map_err(|e| e.to_string())
        .and_then(|f| serde_json::to_writer_pretty(BufWriter::new(f), &report).map_err(|e| e.to_string()))
        .and_then(|_| File::create(&csv).map_err(|e| e.to_string()))
        .and_then(|f| write_summary_csv(&report.summary, f).map_err(|e| e.to_string()));
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write report: {e}");
        return EXIT_FAILURE;
    }
    let _ = write_summary_csv(&report.summary, &mut *out);
    let _ = writeln!(err, "wrote {} and {}", args.out.display(), csv.display());
    EXIT_OK
}

pub fn cmd_relations(args: &RelationsArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(mut config) = resolve(&args.search, err) else {
        return EXIT_USAGE;
    };
    if let Some(r) = args.rounds {
        config.max_rounds = r;
    }
    let collection = match collect_relations(&args.number, &config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_for(&e);
        }
    };
    let store = &collection.store;
    let written = match &args.out {
        Some(path) => File::create(path).and_then(|f| store.write_full_dump(BufWriter::new(f))),
        None => store.write_full_dump(&mut *out),
    }
    .and_then(|_| match &args.partials {
        Some(path) => File::create(path).and_then(|f| store.write_partial_dump(BufWriter::new(f))),
        None => Ok(()),
    });
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    let _ = writeln!(
        err,
        "{} rounds, {} relations ({} combined), {} partials",
        collection.rounds,
        store.fulls().len(),
        store.combined_count(),
        store.partials_found()
    );
    EXIT_OK
}
