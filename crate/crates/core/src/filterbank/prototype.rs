use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum stopband attenuation a built-in prototype must reach.
pub const TARGET_STOPBAND_DB: f64 = 60.0;

const DESIGN_MARGIN_DB: f64 = 0.5;
const RESPONSE_GRID: usize = 8192;

/// Built-in (N, L) pairings.
pub const BUILTIN_PAIRINGS: [(usize, usize); 4] = [(1, 1), (2, 17), (4, 33), (8, 65)];

/// Returns the built-in prototype length for `num_subbands`, if there is one.
pub fn builtin_length(num_subbands: usize) -> Option<usize> {
    BUILTIN_PAIRINGS
        .iter()
        .find(|(n, _)| *n == num_subbands)
        .map(|(_, l)| *l)
}

/// Lowpass prototype from which the analysis bank is cosine-modulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeFilter {
    coefficients: Vec<f64>,
    num_subbands: usize,
    stopband_attenuation_db: f64,
}

impl PrototypeFilter {
    /// Designs the built-in prototype for a supported `(num_subbands, length)` pair.
    ///
    /// The design is a Kaiser-windowed sinc. For each window shape in a fixed
    /// sweep the cutoff is bisected to the largest value that still keeps
    /// `[π/N, π]` at least 60 dB below DC; the widest passband wins. The result
    /// is scaled so that `2N·‖p‖² = 1`, which puts the modulated bank close to
    /// unit total energy.
    pub fn design(num_subbands: usize, length: usize) -> Result<Self> {
        if builtin_length(num_subbands) != Some(length) {
            return Err(Error::UnsupportedPrototype {
                num_subbands,
                length,
            });
        }
        if num_subbands == 1 {
            return Ok(Self {
                coefficients: vec![1.0],
                num_subbands: 1,
                stopband_attenuation_db: f64::INFINITY,
            });
        }

        let target = TARGET_STOPBAND_DB + DESIGN_MARGIN_DB;
        let edge = PI / num_subbands as f64;
        let mut best: Option<(f64, Vec<f64>)> = None;
        // Kaiser shape 5.5 ..= 8.0 in steps of 0.25.
        for step in 0..=10 {
            let shape = 5.5 + 0.25 * step as f64;
            let (mut lo, mut hi) = (0.05 * edge, edge);
            if stopband_attenuation_db(&windowed_sinc(length, lo, shape), num_subbands) < target {
                continue;
            }
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if stopband_attenuation_db(&windowed_sinc(length, mid, shape), num_subbands)
                    >= target
                {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if best.as_ref().map_or(true, |(cutoff, _)| lo > *cutoff) {
                best = Some((lo, windowed_sinc(length, lo, shape)));
            }
        }

        let (_, mut coefficients) = best.ok_or(Error::UnsupportedPrototype {
            num_subbands,
            length,
        })?;
        let energy: f64 = coefficients.iter().map(|c| c * c).sum();
        let scale = (1.0 / (2.0 * num_subbands as f64 * energy)).sqrt();
        coefficients.iter_mut().for_each(|c| *c *= scale);
        Self::from_coefficients(num_subbands, coefficients)
    }

    /// Wraps user-supplied coefficients, measuring their stopband attenuation.
    pub fn from_coefficients(num_subbands: usize, coefficients: Vec<f64>) -> Result<Self> {
        if num_subbands == 0 {
            return Err(Error::invalid("num_subbands", "must be positive"));
        }
        if coefficients.is_empty() {
            return Err(Error::invalid("coefficients", "prototype has no taps"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients", "non-finite prototype tap"));
        }
        if coefficients.iter().all(|c| *c == 0.0) {
            return Err(Error::invalid("coefficients", "all-zero prototype"));
        }
        let stopband_attenuation_db = stopband_attenuation_db(&coefficients, num_subbands);
        Ok(Self {
            coefficients,
            num_subbands,
            stopband_attenuation_db,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn num_subbands(&self) -> usize {
        self.num_subbands
    }

    pub fn stopband_attenuation_db(&self) -> f64 {
        self.stopband_attenuation_db
    }

    /// Parses the text format: a `N=<n> L=<l>` header, then one coefficient per line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (header_line, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty prototype file".into()))?;

        let mut num_subbands = None;
        let mut length = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| {
                parse_err(header_line, format!("malformed header field `{field}`"))
            })?;
            let value: usize = value
                .parse()
                .map_err(|_| parse_err(header_line, format!("bad integer in `{field}`")))?;
            match key {
                "N" => num_subbands = Some(value),
                "L" => length = Some(value),
                _ => {
                    return Err(parse_err(
                        header_line,
                        format!("unknown header key `{key}`"),
                    ))
                }
            }
        }
        let (num_subbands, length) = match (num_subbands, length) {
            (Some(n), Some(l)) => (n, l),
            _ => {
                return Err(parse_err(
                    header_line,
                    "header must be `N=<n> L=<l>`".into(),
                ))
            }
        };

        let coefficients = lines
            .map(|(line, l)| {
                l.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("not a number: `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coefficients.len() != length {
            return Err(parse_err(
                header_line,
                format!(
                    "header declares L={length} but file has {} taps",
                    coefficients.len()
                ),
            ));
        }
        Self::from_coefficients(num_subbands, coefficients)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("N={} L={}\n", self.num_subbands, self.len());
        for c in &self.coefficients {
            // `{:e}` round-trips f64 exactly.
            let _ = writeln!(out, "{c:e}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Worst-case attenuation over `[π/N, π]` relative to the DC gain, in dB.
///
/// A single-band prototype has no stopband and reports `+∞`.
pub fn stopband_attenuation_db(coefficients: &[f64], num_subbands: usize) -> f64 {
    if num_subbands <= 1 {
        return f64::INFINITY;
    }
    let dc = magnitude_response(coefficients, 0.0);
    let edge = PI / num_subbands as f64;
    let worst = (0..=RESPONSE_GRID)
        .map(|j| edge + (PI - edge) * j as f64 / RESPONSE_GRID as f64)
        .map(|w| magnitude_response(coefficients, w))
        .fold(0.0_f64, f64::max);
    if worst == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (dc / worst).log10()
}

/// `|P(e^{jω})|` evaluated directly from the taps.
pub fn magnitude_response(coefficients: &[f64], omega: f64) -> f64 {
    let (re, im) = coefficients
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (n, c)| {
            let phase = omega * n as f64;
            (re + c * phase.cos(), im - c * phase.sin())
        });
    re.hypot(im)
}

fn windowed_sinc(length: usize, cutoff: f64, kaiser_shape: f64) -> Vec<f64> {
    let center = (length as f64 - 1.0) / 2.0;
    let denom = bessel_i0(kaiser_shape);
    let taps: Vec<f64> = (0..length)
        .map(|n| {
            let t = n as f64 - center;
            let ideal = if t == 0.0 {
                cutoff / PI
            } else {
                (cutoff * t).sin() / (PI * t)
            };
            let r = if center == 0.0 { 0.0 } else { t / center };
            let window = bessel_i0(kaiser_shape * (1.0 - r * r).max(0.0).sqrt()) / denom;
            ideal * window
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / dc).collect()
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= half_sq / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}
