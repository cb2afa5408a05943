//! `starlab <scenario> --config <file> [--out <dir>] [--seed N] [--verify]`
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! runtime errors and, with `--verify`, for failure events.

use anyhow::{Context, Result};
use clap::Parser;
use starlab_cli::config::{validate_config, Scenario};
use starlab_cli::output::{Manifest, RunDir, Severity, VERSION};
use starlab_cli::scenarios;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "starlab", version, about = "Expanding-star experiment runner")]
struct Cli {
    scenario: Scenario,
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat failure events as a failed run (exit code 2).
    #[arg(long)]
    verify: bool,
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("STARLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!(
                "STARLAB_THREADS must be a positive integer, got {v:?}"
            )),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let raw = match std::fs::read_to_string(&cli.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut cfg = match validate_config(&raw, Some(cli.scenario)) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("error: invalid configuration {}", cli.config.display());
            for e in errors {
                eprintln!("  - {e}");
            }
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    match thread_cap() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("error: thread pool: {e}");
                return ExitCode::from(RUNTIME_FAILURE);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(CONFIG_ERROR);
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("starlab-out").join(cli.scenario.to_string()));
    match execute(&cfg, &out) {
        Ok(failed) => {
            println!("{} finished; outputs in {}", cli.scenario, out.display());
            if failed && cli.verify {
                eprintln!("error: failure events recorded (see manifest.json)");
                ExitCode::from(RUNTIME_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME_FAILURE)
        }
    }
}

/// Runs the scenario and writes the manifest. Returns whether a failure
/// event was recorded; a scenario error is logged in the manifest and
/// then returned.
fn execute(cfg: &starlab_cli::config::ScenarioConfig, out: &std::path::Path) -> Result<bool> {
    let mut dir = RunDir::create(out)?;
    let result = scenarios::run(cfg, &mut dir);
    let summary = match &result {
        Ok(v) => v.clone(),
        Err(e) => {
            dir.event("runner", "error", Severity::Failure, None, format!("{e:#}"));
            serde_json::Value::Null
        }
    };
    let mut outputs = dir.files.clone();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        version: VERSION.to_string(),
        scenario: cfg.scenario().to_string(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg).context("serializing config")?,
        events: dir.events.clone(),
        outputs,
        summary,
    };
    dir.json("manifest.json", &manifest)?;
    result.map(|_| dir.has_failure())
}
