use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// dB values below this are clipped and flagged.
pub const DB_FLOOR: f64 = -300.0;
/// ERLE reported when the smoothed error power is exactly zero.
pub const ERLE_CEILING_DB: f64 = 100.0;

/// `10·log10(x)`, clipped at [`DB_FLOOR`]. The flag is set when clipping occurred.
pub fn to_db(x: f64) -> (f64, bool) {
    let db = 10.0 * x.log10();
    if db < DB_FLOOR || x <= 0.0 {
        (DB_FLOOR, true)
    } else {
        (db, false)
    }
}

/// Ensemble-averaged per-iteration metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    /// Linear-domain mean across contributing trials.
    pub linear: Vec<f64>,
    /// Number of trials averaged.
    pub trials: usize,
    /// Trials excluded because they diverged.
    pub diverged: usize,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn db(&self) -> Vec<f64> {
        self.linear.iter().map(|x| to_db(*x).0).collect()
    }

    /// Number of entries clipped at the dB floor.
    pub fn clipped(&self) -> usize {
        self.linear.iter().filter(|x| to_db(**x).1).count()
    }

    /// Mean of the last `window` linear values.
    pub fn steady_state(&self, window: usize) -> Result<f64> {
        steady_state_mean(&self.linear, window)
    }

    pub fn steady_state_db(&self, window: usize) -> Result<f64> {
        Ok(to_db(self.steady_state(window)?).0)
    }
}

pub fn steady_state_mean(linear: &[f64], window: usize) -> Result<f64> {
    if window == 0 || window > linear.len() {
        return Err(Error::invalid(
            "steady_state_window",
            format!("must lie in [1, {}], got {window}", linear.len()),
        ));
    }
    let tail = &linear[linear.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// First index whose linear value is at or below `threshold_db`.
pub fn iterations_to_threshold(linear: &[f64], threshold_db: f64) -> Option<usize> {
    let limit = 10f64.powf(threshold_db / 10.0);
    linear.iter().position(|x| *x <= limit)
}

/// Smoothed echo return loss enhancement.
#[derive(Debug, Clone, PartialEq)]
pub struct ErleSeries {
    pub values_db: Vec<f64>,
    /// Samples reported at [`ERLE_CEILING_DB`] because the error power was zero.
    pub clipped: usize,
}

impl ErleSeries {
    /// Mean dB value over the final `fraction` of the series.
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let n = self.values_db.len();
        let count = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let tail = &self.values_db[n - count.min(n)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }
}

/// `10·log10(σ_d²(n)/σ_e²(n))` with `σ²(n) = χσ²(n−1) + (1−χ)x²(n)`, both
/// smoothers starting from the first squared sample.
pub fn erle_series(desired: &[f64], error: &[f64], smoothing: f64) -> Result<ErleSeries> {
    if desired.len() != error.len() {
        return Err(Error::DimensionMismatch {
            context: "ERLE signals",
            expected: desired.len(),
            actual: error.len(),
        });
    }
    if !(smoothing > 0.0 && smoothing < 1.0) {
        return Err(Error::invalid(
            "erle_smoothing",
            format!("must lie in (0, 1), got {smoothing}"),
        ));
    }
    let mut values_db = Vec::with_capacity(desired.len());
    let mut clipped = 0;
    let (mut pd, mut pe) = (0.0, 0.0);
    for (n, (d, e)) in desired.iter().zip(error).enumerate() {
        if n == 0 {
            pd = d * d;
            pe = e * e;
        } else {
            pd = smoothing * pd + (1.0 - smoothing) * d * d;
            pe = smoothing * pe + (1.0 - smoothing) * e * e;
        }
        if pe == 0.0 {
            clipped += 1;
            values_db.push(ERLE_CEILING_DB);
        } else {
            values_db.push(10.0 * (pd / pe).log10());
        }
    }
    Ok(ErleSeries { values_db, clipped })
}

/// First index at or after `from` where the series gets within `tolerance`
/// of `target`, i.e. `value ≤ target + tolerance` for `Lower` and
/// `value ≥ target − tolerance` for `Higher`.
pub fn recovery_index(
    series: &[f64],
    from: usize,
    target: f64,
    tolerance: f64,
    better: Better,
) -> Option<usize> {
    series
        .iter()
        .enumerate()
        .skip(from)
        .find(|(_, v)| match better {
            Better::Lower => **v <= target + tolerance,
            Better::Higher => **v >= target - tolerance,
        })
        .map(|(i, _)| i)
}

/// Largest `|a_k − b_k|` over `k ≥ from`, with the index where it occurs.
///
/// Both series must have the same length and extend past `from`.
pub fn max_deviation(a: &[f64], b: &[f64], from: usize) -> Result<(usize, f64)> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "series lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if from >= a.len() {
        return Err(Error::Alignment(format!(
            "start index {from} is past the series end ({})",
            a.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .enumerate()
        .skip(from)
        .map(|(k, (x, y))| (k, (x - y).abs()))
        .fold(
            (from, 0.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Lower,
    Higher,
}
