//! `nsens`: reproducible experiment runner.
//!
//! Every run writes its result atomically to `--out` (default
//! `<subcommand>.<format>`) and a manifest with the resolved configuration
//! next to it. Errors go to stderr as one JSON object; exit codes are 0 (ok),
//! 2 (configuration), 3 (enumeration cap) and 4 (an inequality failed).

mod commands;
mod config;
mod error;
mod fixtures;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use commands::*;
use config::{from_command_line, merge, FileConfig, Format};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "nsens", version, about = "Noise sensitivity experiments on finite product spaces")]
struct Cli {
    /// TOML run file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Result file; the manifest goes next to it with extension `.manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Variance spectrum of a function.
    Decompose(DecomposeArgs),
    /// Influence profile and W.
    Influence(InfluenceArgs),
    /// Exact and Monte Carlo noise covariance over a sweep of noise levels.
    NoiseCov(NoiseCovArgs),
    /// Covariance bounds; exits with 4 if any fails.
    BoundsCheck(BoundsArgs),
    /// Hypercontractivity constants of a law.
    Hyper(HyperArgs),
    /// Modified Tribes sharpness table.
    Tribes(TribesArgs),
    /// Critical 2D polymer: W and the Monte Carlo noise covariance per N.
    Polymer(PolymerArgs),
    /// Covariances between the polymer and white-noise monomials.
    ShfIndependence(ShfArgs),
    /// Vanishing influences without noise sensitivity.
    Counterexample(CounterexampleArgs),
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: u64,
    workers: usize,
    format: Format,
    out: &'a Path,
    params: serde_json::Value,
    grid: serde_json::Value,
}

/// Writes through a temporary file in the target directory, then renames.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(CliError::io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io)?;
    tmp.write_all(bytes).map_err(CliError::io)?;
    tmp.persist(path).map_err(|e| CliError::io(e.error))?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn resolve_global<T: Clone>(m: &ArgMatches, id: &str, flag: T, file: Option<T>) -> T {
    match file {
        Some(v) if !from_command_line(m, id) => v,
        _ => flag,
    }
}

fn run() -> Result<(), CliError> {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::config(e.render().to_string().trim_end())),
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::config(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = resolve_global(&matches, "seed", cli.seed, file.seed);
    let workers = resolve_global(&matches, "workers", cli.workers, file.workers);
    let format = resolve_global(&matches, "format", cli.format, file.format);
    let out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from(format!("{name}.{}", format.extension())));
    if workers == 0 {
        return Err(CliError::config("--workers must be at least 1"));
    }
    let section = file.section(name);

    macro_rules! resolved {
        ($args:expr) => {{
            let a = merge($args, sub, section, name)?;
            let params = serde_json::to_value(&a).expect("arguments serialize");
            (a, params)
        }};
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(e.to_string()))?;
    let (outcome, params) = pool.install(|| -> Result<_, CliError> {
        Ok(match &cli.command {
            Command::Decompose(a) => {
                let (a, p) = resolved!(a);
                (decompose(&a, seed, format)?, p)
            }
            Command::Influence(a) => {
                let (a, p) = resolved!(a);
                (influence(&a, seed, format)?, p)
            }
            Command::NoiseCov(a) => {
                let (a, p) = resolved!(a);
                (noise_cov(&a, seed, format)?, p)
            }
            Command::BoundsCheck(a) => {
                let (a, p) = resolved!(a);
                (bounds_check(&a, seed, format)?, p)
            }
            Command::Hyper(a) => {
                let (a, p) = resolved!(a);
                (hyper(&a, format)?, p)
            }
            Command::Tribes(a) => {
                let (a, p) = resolved!(a);
                (tribes(&a, format)?, p)
            }
            Command::Polymer(a) => {
                let (a, p) = resolved!(a);
                (polymer(&a, seed, format)?, p)
            }
            Command::ShfIndependence(a) => {
                let (a, p) = resolved!(a);
                (shf_independence(&a, seed, format)?, p)
            }
            Command::Counterexample(a) => {
                let (a, p) = resolved!(a);
                (counterexample(&a, format)?, p)
            }
        })
    })?;

    write_atomic(&out, &outcome.body)?;
    let manifest = Manifest {
        tool: "nsens",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        seed,
        workers,
        format,
        out: &out,
        params,
        grid: outcome.grid,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&manifest_path(&out), &bytes)?;
    match outcome.violation {
        Some(msg) => Err(CliError::violation(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            ExitCode::from(e.exit_code as u8)
        }
    }
}
