//! Command-line front end: `chaowork [--config F] [--seed N] [--workers N]
//! [--out DIR] <command>`. Settings are layered file < `CHAOWORK_*`
//! environment < flags. Failures print a JSON error object on stdout and
//! exit non-zero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{load_config, RunConfig};
use crate::error::{Error, Result};
use crate::output::{Manifest, Output};
use crate::scenario::{
    run_classical, run_compare, run_jarzynski, run_quantum, run_scenario, run_semiclassical, Scenario,
};

#[derive(Debug, Parser)]
#[command(name = "chaowork", version, about = "Work statistics of a quenched chaotic billiard")]
pub struct Cli {
    /// TOML configuration file (flat keys; see the README).
    #[arg(long, global = true, env = "CHAOWORK_CONFIG")]
    pub config: Option<PathBuf>,
    /// Run seed; overrides the file and environment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per logical CPU).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Semiclassical characteristic functions and work densities for every
    /// configured (beta, hbar).
    Semiclassical,
    /// Classical work densities and Jarzynski checks for every beta.
    Classical,
    /// Finite-difference quantum reference for every hbar and beta.
    Quantum,
    /// Jarzynski free-energy sweep over the configured betas.
    Jarzynski,
    /// L1 distance between two histogram CSVs.
    Compare { a: PathBuf, b: PathBuf },
    /// One of the preset experiments.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Fig2,
    Fig3,
    Fig4,
}

impl From<ScenarioName> for Scenario {
    fn from(s: ScenarioName) -> Self {
        match s {
            ScenarioName::Fig2 => Scenario::Fig2,
            ScenarioName::Fig3 => Scenario::Fig3,
            ScenarioName::Fig4 => Scenario::Fig4,
        }
    }
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Semiclassical => "semiclassical".into(),
            Command::Classical => "classical".into(),
            Command::Quantum => "quantum".into(),
            Command::Jarzynski => "jarzynski".into(),
            Command::Compare { .. } => "compare".into(),
            Command::Scenario { name } => format!("scenario {}", Scenario::from(*name).name()),
        }
    }
}

/// Effective configuration: file, then environment, then flags, then the
/// scenario presets (from the command, or from the `scenario` key when the
/// command is `scenario`).
pub fn resolve_config<I>(cli: &Cli, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let raw = match &cli.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut cfg = load_config(&raw, env)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Command::Scenario { name } = &cli.command {
        cfg = Scenario::from(*name).apply(&cfg);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; returns the manifest and the summary.
pub fn run<I>(cli: &Cli, env: I) -> Result<(Manifest, Value)>
where
    I: IntoIterator<Item = (String, String)>,
{
    let cfg = resolve_config(cli, env)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::range("workers", e.to_string()))?;
    let mut out = Output::create(&cfg.out_dir, &cfg, &cli.command.name())?;
    let summary = pool.install(|| match &cli.command {
        Command::Semiclassical => run_semiclassical(&cfg, &mut out),
        Command::Classical => run_classical(&cfg, &mut out),
        Command::Quantum => run_quantum(&cfg, &mut out),
        Command::Jarzynski => run_jarzynski(&cfg, &mut out),
        Command::Compare { a, b } => run_compare(a, b, &mut out),
        Command::Scenario { name } => run_scenario((*name).into(), &cfg, &mut out),
    })?;
    Ok((out.finish()?, summary))
}

/// Machine-readable error report.
pub fn error_json(err: &Error) -> Value {
    let mut v = json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
    if let Error::Parse { line, column, .. } = err {
        v["error"]["line"] = json!(line);
        v["error"]["column"] = json!(column);
    }
    if let Error::Range { field, .. } = err {
        v["error"]["field"] = json!(field);
    }
    v
}

/// Entry point of the `chaowork` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHAOWORK_LOG", "info")).init();
    let cli = Cli::parse();
    match run(&cli, std::env::vars()) {
        Ok((manifest, _)) => {
            let done = json!({
                "status": "ok",
                "command": manifest.command,
                "manifest_hash": manifest.manifest_hash,
                "out_dir": manifest.config.out_dir,
                "files": manifest.files.len(),
                "warnings": manifest.warnings,
            });
            println!("{done}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", error_json(&err));
            match err {
                Error::Parse { .. } | Error::Range { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
