//! Command-line harness: parses an experiment request, loads and validates
//! its configuration, runs the mechanism and writes CSV tables (plus SVG
//! charts with `--svg`) into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 64 usage error.

mod args;
mod dda;
mod evo;
mod output;
mod sip;

use std::fs;
use std::path::{Path, PathBuf};

use edgemarket::dda::DdaError;
use edgemarket::evo::EvoError;
use edgemarket::sip::SipError;
use edgemarket::{ConfigError, MechanismConfig, SimConfig};
use thiserror::Error;

pub use args::{parse_cli, Command, ExperimentSpec, Parsed};
pub use output::{Artifact, RunArtifacts};

use output::{io_err, Writer};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EvoError> for CliError {
    fn from(e: EvoError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DdaError> for CliError {
    fn from(e: DdaError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SipError> for CliError {
    fn from(e: SipError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// A validated configuration plus the directory its relative paths hang off.
pub(crate) struct Loaded {
    pub config: SimConfig,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Reads a JSON side file (instance, Q-table); parse failures are configuration errors.
pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load(spec: &ExperimentSpec) -> Result<Loaded, CliError> {
    let raw = read_text(&spec.config)?;
    let mut config: SimConfig = serde_json::from_str(&raw).map_err(ConfigError::from)?;
    if let Some(seed) = spec.seed {
        config.seed = seed;
    }
    config.validate()?;
    if config.mechanism.name() != spec.mechanism() {
        return Err(CliError::Config(format!(
            "`{}` needs a `{}` configuration, {} describes `{}`",
            spec.command.name(),
            spec.mechanism(),
            spec.config.display(),
            config.mechanism.name()
        )));
    }
    let base_dir = spec.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base_dir })
}

/// Worker pool sized by `MEM_THREADS` (machine parallelism when unset or 0).
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("MEM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("MEM_THREADS must be a non-negative integer, got `{v}`")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Loads the configuration, runs the requested experiment and writes its files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunArtifacts, CliError> {
    let loaded = load(spec)?;
    let out_dir = spec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&loaded.config.output.dir));
    let writer = Writer::new(out_dir, spec.svg)?;
    let seed = loaded.config.seed;
    thread_pool()?.install(|| match (&loaded.config.mechanism, spec.command) {
        (MechanismConfig::Evo(cfg), Command::EvoRun) => evo::run(cfg, writer),
        (MechanismConfig::Evo(cfg), Command::EvoSweep) => evo::sweep(cfg, writer),
        (MechanismConfig::Dda(cfg), Command::DdaRun) => dda::run(cfg, seed, &loaded, writer),
        (MechanismConfig::Dda(cfg), Command::DdaCompare) => dda::compare(cfg, seed, &loaded, writer),
        (MechanismConfig::Dda(cfg), Command::DdaTrain) => dda::train(cfg, seed, &loaded, writer),
        (MechanismConfig::Sip(cfg), Command::SipSolve) => sip::solve(cfg, seed, &loaded, writer),
        (MechanismConfig::Sip(cfg), Command::SipCompare) => sip::compare(cfg, seed, &loaded, writer),
        _ => unreachable!("mechanism checked in load"),
    })
}

/// Parses, runs and prints; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let spec = match parse_cli(args) {
        Ok(Parsed::Run(spec)) => spec,
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return 0;
        }
        Err(e) => {
            eprintln!("{}", e.to_string().trim_end());
            return e.exit_code();
        }
    };
    match run_experiment(&spec) {
        Ok(artifacts) => {
            print!("{}", artifacts.report());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
