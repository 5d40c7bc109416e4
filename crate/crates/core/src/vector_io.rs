//! Plain-text vectors: one value per line. Used for weight snapshots and
//! channel impulse responses.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn format_vector(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        let _ = writeln!(out, "{v:e}");
    }
    out
}

/// Parses one number per line. Blank lines and `#` comments are skipped.
pub fn parse_vector(text: &str, origin: &Path) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            l.parse::<f64>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line,
                reason: format!("not a number: `{l}`"),
            })
        })
        .collect()
}

pub fn write_vector(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    std::fs::write(path, format_vector(values))?;
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector(&std::fs::read_to_string(path)?, path)
}
