//! Configuration-driven front end for the `proxsaf` library.

pub mod commands;
pub mod config;
pub mod output;
pub mod setup;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};

pub use commands::{Command, Report};
pub use config::{Config, ConfigError, Overrides};
use output::{write_atomic, RunManifest};

/// How a completed command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// At least one trial diverged.
    Diverged,
}

pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Overrides,
    pub workers: Option<usize>,
}

/// Loads the config, runs the command and writes its outputs, the normalized
/// config, a summary and the manifest into the output directory.
pub fn run(inv: &Invocation) -> Result<(Status, Report)> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let config = Config::load(&inv.config, &inv.overrides)?;
    std::fs::create_dir_all(&inv.out)
        .with_context(|| format!("cannot create output directory {}", inv.out.display()))?;

    let ctx = commands::Context::new(&config, &inv.out, inv.workers)?;
    let mut report = commands::execute(inv.command, &ctx)?;
    let status = if report.unrecovered_divergence() {
        Status::Diverged
    } else {
        Status::Ok
    };

    let config_path = inv.out.join("config.toml");
    write_atomic(&config_path, config.to_toml().as_bytes())?;
    let summary_path = inv.out.join("summary.txt");
    write_atomic(&summary_path, report.summary.as_bytes())?;
    report.files.push(config_path);
    report.files.push(summary_path);

    let manifest = RunManifest {
        experiment_id: experiment_id(&config, inv.command, &ctx.hash),
        command: inv.command.as_str().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: ctx.hash.clone(),
        config: config.to_toml(),
        seed: config.run.seed,
        outputs: report.files.clone(),
        started_unix_seconds: started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        workers: inv.workers,
        divergence_counts: report.divergence.clone(),
        status: match status {
            Status::Ok => "ok",
            Status::Diverged => "diverged",
        }
        .to_string(),
    };
    manifest.write(&manifest_path(&inv.out))?;
    Ok((status, report))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}

fn experiment_id(config: &Config, command: Command, hash: &str) -> String {
    let name = config.run.name.as_deref().unwrap_or("experiment");
    format!("{name}-{}-{}", command.as_str(), &hash[..12])
}
