use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::seeded_rng;
use crate::error::{Error, Result};
use crate::vector_io::{read_vector, write_vector};

/// Coefficients with magnitude at or below this count as zero.
pub const NONZERO_TOLERANCE: f64 = 1e-12;

/// How the spread parameter `1/√Q` of random sparse channels is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadReading {
    /// Nonzero taps have variance `1/√Q`.
    #[default]
    Variance,
    /// Nonzero taps have standard deviation `1/√Q`.
    StdDev,
}

/// A right shift of the echo path applied at a given fullband sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSchedule {
    pub at_sample: usize,
    pub shift_taps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub impulse_response: Vec<f64>,
    pub sparsity: usize,
    pub change_schedule: Option<ChangeSchedule>,
}

impl ChannelModel {
    pub fn new(impulse_response: Vec<f64>) -> Self {
        let sparsity = count_nonzero(&impulse_response);
        Self {
            impulse_response,
            sparsity,
            change_schedule: None,
        }
    }

    pub fn with_change(mut self, schedule: ChangeSchedule) -> Self {
        self.change_schedule = Some(schedule);
        self
    }

    pub fn len(&self) -> usize {
        self.impulse_response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impulse_response.is_empty()
    }

    /// Random channel with `Q` nonzero Gaussian taps at distinct uniform positions.
    pub fn random_sparse(
        filter_length: usize,
        nonzeros: usize,
        seed: u64,
        reading: SpreadReading,
    ) -> Result<Self> {
        if nonzeros == 0 || nonzeros > filter_length {
            return Err(Error::invalid(
                "sparsity",
                format!("must lie in [1, {filter_length}], got {nonzeros}"),
            ));
        }
        let mut rng = seeded_rng(seed, CHANNEL_STREAM);
        let spread = 1.0 / (nonzeros as f64).sqrt();
        let std = match reading {
            SpreadReading::Variance => spread.sqrt(),
            SpreadReading::StdDev => spread,
        };
        let mut taps = vec![0.0; filter_length];
        for pos in index::sample(&mut rng, filter_length, nonzeros) {
            taps[pos] = nonzero_gaussian(&mut rng) * std;
        }
        Ok(Self::new(taps))
    }

    /// Reads one coefficient per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let taps = read_vector(path.as_ref())?;
        if taps.is_empty() {
            return Err(Error::Degenerate(format!(
                "{} contains no coefficients",
                path.as_ref().display()
            )));
        }
        let channel = Self::new(taps);
        if channel.sparsity == 0 {
            return Err(Error::Degenerate(format!(
                "{} contains only zero coefficients",
                path.as_ref().display()
            )));
        }
        Ok(channel)
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        write_vector(path.as_ref(), &self.impulse_response)
    }

    /// Impulse response delayed by `taps`: zeros enter at the front and the
    /// trailing coefficients are dropped.
    pub fn shifted(&self, taps: usize) -> Self {
        let m = self.len();
        let mut out = vec![0.0; m];
        if taps < m {
            out[taps..].copy_from_slice(&self.impulse_response[..m - taps]);
        }
        Self {
            sparsity: count_nonzero(&out),
            impulse_response: out,
            change_schedule: None,
        }
    }

    /// The channel after its scheduled change, or a clone if none is set.
    pub fn apply_sudden_change(&self) -> Self {
        match self.change_schedule {
            Some(s) => self.shifted(s.shift_taps),
            None => Self {
                change_schedule: None,
                ..self.clone()
            },
        }
    }

    /// Impulse response in effect at fullband sample `n`.
    pub fn response_at<'a>(&'a self, n: usize, changed: &'a ChannelModel) -> &'a [f64] {
        match self.change_schedule {
            Some(s) if n >= s.at_sample => &changed.impulse_response,
            _ => &self.impulse_response,
        }
    }
}

const CHANNEL_STREAM: u64 = u64::MAX;

fn nonzero_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        if x.abs() > NONZERO_TOLERANCE {
            return x;
        }
    }
}

pub fn count_nonzero(taps: &[f64]) -> usize {
    taps.iter().filter(|w| w.abs() > NONZERO_TOLERANCE).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_boundaries() {
        let dense = ChannelModel::random_sparse(32, 32, 1, SpreadReading::Variance).unwrap();
        assert_eq!(count_nonzero(&dense.impulse_response), 32);
        let spike = ChannelModel::random_sparse(32, 1, 1, SpreadReading::Variance).unwrap();
        assert_eq!(spike.sparsity, 1);
        assert!(ChannelModel::random_sparse(32, 0, 1, SpreadReading::Variance).is_err());
        assert!(ChannelModel::random_sparse(32, 33, 1, SpreadReading::Variance).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = ChannelModel::random_sparse(128, 8, 42, SpreadReading::Variance).unwrap();
        let b = ChannelModel::random_sparse(128, 8, 42, SpreadReading::Variance).unwrap();
        let c = ChannelModel::random_sparse(128, 8, 43, SpreadReading::Variance).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.sparsity, 8);
    }

    #[test]
    fn spread_reading_scales_taps() {
        let v = ChannelModel::random_sparse(64, 16, 5, SpreadReading::Variance).unwrap();
        let s = ChannelModel::random_sparse(64, 16, 5, SpreadReading::StdDev).unwrap();
        // Same draws; variance 1/4 means std 1/2, std reading uses 1/4.
        for (a, b) in v.impulse_response.iter().zip(&s.impulse_response) {
            assert!((a * 0.5 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_semantics() {
        let zero = ChannelModel::new(vec![0.0; 20]);
        assert_eq!(zero.shifted(12).impulse_response, vec![0.0; 20]);

        let c = ChannelModel::new((1..=30).map(|x| x as f64).collect());
        assert_eq!(c.shifted(12).shifted(12), c.shifted(24));
        let s = c.shifted(12);
        assert!(s.impulse_response[..12].iter().all(|x| *x == 0.0));
        assert_eq!(s.impulse_response[12], 1.0);
        let e0: f64 = c.impulse_response.iter().map(|x| x * x).sum();
        let e1: f64 = s.impulse_response.iter().map(|x| x * x).sum();
        assert!(e1 <= e0);
        assert_eq!(c.shifted(40).sparsity, 0);
    }

    #[test]
    fn response_switches_at_schedule() {
        let c = ChannelModel::new(vec![1.0, 0.0, 0.0]).with_change(ChangeSchedule {
            at_sample: 10,
            shift_taps: 1,
        });
        let changed = c.apply_sudden_change();
        assert_eq!(c.response_at(9, &changed), &[1.0, 0.0, 0.0]);
        assert_eq!(c.response_at(10, &changed), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.txt");
        let c = ChannelModel::random_sparse(512, 64, 9, SpreadReading::Variance).unwrap();
        c.export(&path).unwrap();
        let back = ChannelModel::load(&path).unwrap();
        assert_eq!(back.impulse_response, c.impulse_response);
        assert_eq!(back.sparsity, 64);

        std::fs::write(&path, "0\n0\n0\n").unwrap();
        assert!(ChannelModel::load(&path).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(ChannelModel::load(&path).is_err());
    }
}
