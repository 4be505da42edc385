//! The `covertslot` experiment runner: bound reports, link simulations,
//! detection experiments, throughput sweeps and oracle certification.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};

pub use commands::{bounds_report, detect, oracle_check, simulate, sweep};
pub use config::{ExperimentConfig, Overrides, SlotRule};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "COVERTSLOT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "covertslot", version, about = "Covert communication with random slot selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity bounds and per-n parameters as JSON.
    Bounds(Flags),
    /// Error probability and covertness of the achievability scheme.
    Simulate(Flags),
    /// Converse detection experiments above and below the threshold.
    Detect(Flags),
    /// Normalized throughput against n, as CSV and SVG.
    Sweep(Flags),
    /// Exact-enumeration checks of the divergence bounds.
    OracleCheck {
        #[command(flatten)]
        flags: Flags,
        /// Multiply the checked bounds by this factor (below 1 should fail).
        #[arg(long)]
        bound_scale: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Flags {
    /// TOML experiment manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Block lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Fixed number of slots.
    #[arg(long = "L")]
    pub slots: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Flags {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            n: self.n.clone(),
            slots: self.slots,
            delta: self.delta,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
        });
        Ok(cfg)
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidParameters(format!("{THREADS_ENV} = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameters(e.to_string()))
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    output::write_atomic(&path, bytes)?;
    Ok(path)
}

#[derive(Serialize)]
struct Meta<'a, M> {
    config: &'a ExperimentConfig,
    rows: &'a [M],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Writes `<name>.csv` and `<name>.json` and turns a stored error into the
/// command result.
fn finish<M: Serialize>(cfg: &ExperimentConfig, name: &str, run: commands::RunOutput<M>) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    let meta = Meta {
        config: cfg,
        rows: &run.meta,
        error: run.error.as_ref().map(|e| e.to_string()),
    };
    let paths = vec![
        write(dir, &format!("{name}.csv"), &run.table.to_bytes())?,
        write(dir, &format!("{name}.json"), &json(&meta)?)?,
    ];
    match run.error {
        Some(e) => Err(e),
        None => Ok(paths),
    }
}

/// Runs one subcommand; the exit code is 1 when oracle checks fail.
pub fn run(cli: &Cli) -> Result<ExitCode> {
    let report = |paths: Vec<PathBuf>| {
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
    };
    match &cli.command {
        Command::Bounds(f) => {
            let cfg = f.load()?;
            let r = bounds_report(&cfg)?;
            let bytes = json(&r)?;
            report(vec![write(&cfg.output_dir, "bounds.json", &bytes)?]);
            print!("{}", String::from_utf8_lossy(&bytes));
        }
        Command::Simulate(f) => {
            let cfg = f.load()?;
            report(finish(&cfg, "simulate", simulate(&cfg)?)?);
        }
        Command::Detect(f) => {
            let cfg = f.load()?;
            report(finish(&cfg, "detect", detect(&cfg)?)?);
        }
        Command::Sweep(f) => {
            let cfg = f.load()?;
            let out = sweep(&cfg)?;
            let svg = write(&cfg.output_dir, "sweep.svg", out.svg.as_bytes())?;
            let mut paths = finish(&cfg, "sweep", out.run)?;
            paths.push(svg);
            report(paths);
        }
        Command::OracleCheck { flags, bound_scale } => {
            let mut cfg = flags.load()?;
            if let Some(s) = bound_scale {
                cfg.oracle.bound_scale = *s;
            }
            let r = oracle_check(&cfg)?;
            for s in &r.skipped {
                eprintln!("skipped: {s}");
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                checks: usize,
                failures: usize,
                passed: bool,
                skipped: &'a [String],
            }
            let summary = Summary {
                checks: r.checks,
                failures: r.failures,
                passed: r.passed(),
                skipped: &r.skipped,
            };
            report(vec![
                write(&cfg.output_dir, "oracle_check.csv", &r.table.to_bytes())?,
                write(&cfg.output_dir, "oracle_check.json", &json(&summary)?)?,
            ]);
            println!(
                "oracle-check: {} of {} checks passed{}",
                r.checks - r.failures,
                r.checks,
                if r.passed() { "" } else { " (FAILED)" }
            );
            if !r.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
