//! CSV tables, atomic file writes and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("cannot write {}", path.display()))
}

/// A CSV document: a `# config_hash=...` comment, a header row, then rows.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(config_hash: &str, columns: &[&str]) -> Self {
        let mut text = format!("# config_hash={config_hash}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            text,
            columns: columns.len(),
        }
    }

    /// Appends a row: an integer index followed by values printed with six
    /// decimals.
    pub fn row(&mut self, index: usize, values: &[f64]) {
        debug_assert_eq!(values.len() + 1, self.columns);
        let _ = write!(self.text, "{index}");
        for v in values {
            let _ = write!(self.text, ",{v:.6}");
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment_id: String,
    pub command: String,
    pub version: String,
    pub config_hash: String,
    /// Normalized config; re-running it with the same command reproduces
    /// every output byte for byte.
    pub config: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub workers: Option<usize>,
    /// Diverged trials per algorithm label.
    pub divergence_counts: BTreeMap<String, usize>,
    pub status: String,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        write_atomic(path, json.as_bytes())
    }
}
