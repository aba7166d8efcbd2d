//! Config-driven experiment runner: `qedlab <run-kind> --config <path>
//! [--section.key=value ...]`.
//!
//! Exit status: 0 when every built-in assertion passes, 1 when one fails (or
//! on an internal error), 2 for configuration errors, 3 when a capacity limit
//! is hit, 4 when a solver does not converge or tracking is lost.

pub mod cache;
pub mod config;
pub mod record;
pub mod runs;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::cache::{Cache, CACHE_ENV};
use crate::config::{load_file, LoadedConfig, RunKind};
use crate::record::{RunRecord, RECORD_FILE};
use crate::runs::{execute, Failure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qedlab",
    version,
    about = "Ground-state experiments on a truncated atom-photon model",
    after_help = "Any config key can be overridden as --section.key=value, e.g. --run.alpha-max=0.3.\n\
                  Cached stages live in $QEDLAB_CACHE_DIR (default <output directory>/cache)."
)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    kind: RunKind,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Do not read or write the stage cache.
    #[arg(long)]
    no_cache: bool,
    /// Print nothing on success.
    #[arg(long, short)]
    quiet: bool,
}

/// `--section.key=value` arguments go to the config; everything else to clap.
fn split_overrides(args: &[String]) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in args.iter().enumerate() {
        let is_override = i > 0
            && a.starts_with("--")
            && a.split_once('=').map_or(false, |(k, _)| k.contains('.'));
        if is_override {
            overrides.push(a.trim_start_matches("--").to_string());
        } else {
            rest.push(a.clone());
        }
    }
    (rest, overrides)
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run_cli(args: &[String]) -> i32 {
    let (rest, overrides) = split_overrides(args);
    let cli = match Cli::try_parse_from(&rest) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let loaded = match load_file(&cli.config, Some(cli.kind), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qedlab: {e}");
            return EXIT_CONFIG;
        }
    };
    let cache_dir = std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| loaded.config.output.directory.join("cache"));
    let record = run_experiment(&loaded, (!cli.no_cache).then_some(cache_dir.as_path()));
    if !cli.quiet || record.exit_code != EXIT_OK {
        for a in &record.assertions {
            println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
        }
        if let Some(e) = &record.error {
            eprintln!("qedlab: {e}");
        }
        println!("{} -> {} ({})", record.kind, loaded.config.output.directory.display(), record.status());
    }
    record.exit_code
}

/// Executes one run, writes its tables, exports and run record into the
/// output directory, and returns the record.
pub fn run_experiment(c: &LoadedConfig, cache_dir: Option<&Path>) -> RunRecord {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let out_dir = &c.config.output.directory;
    let mut record = RunRecord {
        kind: c.kind.to_string(),
        config_hash: c.hash.clone(),
        started_unix,
        ..RunRecord::default()
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        record.exit_code = EXIT_ASSERTION;
        record.error = Some(format!("cannot create {}: {e}", out_dir.display()));
        eprintln!("qedlab: {}", record.error.as_deref().unwrap_or_default());
        return record;
    }
    let mut cache = match cache_dir {
        Some(d) => Cache::open(d, &c.hash).unwrap_or_else(|e| {
            let mut k = Cache::disabled(&c.hash);
            k.warnings.push(format!("cache disabled: {}: {e}", d.display()));
            k
        }),
        None => Cache::disabled(&c.hash),
    };
    let outcome = execute(c, &mut cache);
    drop_lock(&mut cache);
    for w in &cache.warnings {
        eprintln!("qedlab: warning: {w}");
    }
    let mut write_failure: Option<Failure> = None;
    for t in &outcome.tables {
        match std::fs::write(out_dir.join(&t.name), t.render(c.kind.as_str(), &c.hash)) {
            Ok(()) => record.artifacts.push(t.name.clone()),
            Err(e) => write_failure = Some(Failure::Other(format!("cannot write {}: {e}", t.name))),
        }
    }
    for (name, text) in &outcome.files {
        match std::fs::write(out_dir.join(name), text) {
            Ok(()) => record.artifacts.push(name.clone()),
            Err(e) => write_failure = Some(Failure::Other(format!("cannot write {name}: {e}"))),
        }
    }
    record.cache = cache.events.clone();
    record.assertions = outcome.assertions;
    let failure = outcome.failure.or(write_failure);
    record.exit_code = match &failure {
        Some(f) => f.exit_code(),
        None if record.assertions.iter().all(|a| a.passed) => EXIT_OK,
        None => EXIT_ASSERTION,
    };
    record.error = failure.map(|f| f.message().to_string());
    record.wall_time_s = started.elapsed().as_secs_f64();
    record.artifacts.push(RECORD_FILE.into());
    if let Err(e) = std::fs::write(out_dir.join(RECORD_FILE), record.render()) {
        eprintln!("qedlab: cannot write the run record: {e}");
    }
    record
}

fn drop_lock(cache: &mut Cache) {
    // the lock is released when the cache is dropped; replace it with a
    // disabled handle that keeps the events and warnings
    let events = std::mem::take(&mut cache.events);
    let warnings = std::mem::take(&mut cache.warnings);
    let mut released = Cache::disabled("");
    std::mem::swap(cache, &mut released);
    drop(released);
    cache.events = events;
    cache.warnings = warnings;
}
