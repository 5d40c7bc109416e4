use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::seeded_rng;
use crate::error::{Error, Result};

/// Samples discarded from AR(1) sequences before output.
pub const AR1_WARMUP: usize = 1000;

/// Far-end excitation of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// `u(n) = a·u(n−1) + θ(n)` with unit-variance white Gaussian θ.
    Ar1 { coefficient: f64 },
    /// Unit-variance white Gaussian noise.
    White,
    /// A fixed recording, identical in every trial.
    Recorded(Arc<Vec<f64>>),
}

impl InputSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            InputSource::Ar1 { coefficient } if !(coefficient.abs() < 1.0) => Err(Error::invalid(
                "coefficient",
                format!("AR(1) coefficient must satisfy |a| < 1, got {coefficient}"),
            )),
            InputSource::Recorded(s) if s.is_empty() => {
                Err(Error::Degenerate("recorded input is empty".into()))
            }
            _ => Ok(()),
        }
    }

    /// `n` samples drawn from `rng` (recordings are truncated, never drawn).
    pub fn generate<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            InputSource::Ar1 { coefficient } => Ok(ar1(*coefficient, n, rng)),
            InputSource::White => Ok((0..n).map(|_| rng.sample(StandardNormal)).collect()),
            InputSource::Recorded(s) => {
                if s.len() < n {
                    return Err(Error::NeedMoreInput {
                        needed: n,
                        available: s.len(),
                    });
                }
                Ok(s[..n].to_vec())
            }
        }
    }
}

/// AR(1) sequence of length `n` for a given seed.
pub fn gen_ar1(coefficient: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let source = InputSource::Ar1 { coefficient };
    source.validate()?;
    source.generate(n, &mut seeded_rng(seed, 0))
}

fn ar1<R: Rng>(a: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut x = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..AR1_WARMUP + n {
        let theta: f64 = rng.sample(StandardNormal);
        x = a * x + theta;
        if i >= AR1_WARMUP {
            out.push(x);
        }
    }
    out
}

/// `σ_v² = mean(d̄²) / 10^(snr/10)`.
pub fn noise_variance_for_snr(clean_echo: &[f64], snr_db: f64) -> Result<f64> {
    if clean_echo.is_empty() {
        return Err(Error::Degenerate("clean echo is empty".into()));
    }
    let power = clean_echo.iter().map(|x| x * x).sum::<f64>() / clean_echo.len() as f64;
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Degenerate(format!("clean echo power is {power}")));
    }
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// Mono 16-bit audio scaled to `[−1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

const PCM16_SCALE: f64 = 32768.0;

pub fn load_wav(path: impl AsRef<Path>) -> Result<WavSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(Error::UnsupportedFormat(format!(
            "{}: {} channel(s), {}-bit {:?}; expected mono 16-bit PCM",
            path.display(),
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if samples.is_empty() {
        return Err(Error::Degenerate(format!(
            "{} has no samples",
            path.display()
        )));
    }
    Ok(WavSignal {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Writes mono 16-bit PCM; values outside `[−1, 1)` are clipped.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for s in samples {
        let v = (s * PCM16_SCALE)
            .round()
            .clamp(i16::MIN as f64, i16::MAX as f64);
        writer.write_sample(v as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn ar1_zero_is_white() {
        let x = gen_ar1(0.0, 200_000, 3).unwrap();
        assert!((variance(&x) - 1.0).abs() < 0.02);
    }

    #[test]
    fn ar1_stationary_statistics() {
        let x = gen_ar1(0.8, 1_000_000, 11).unwrap();
        let v = variance(&x);
        assert!((v / (1.0 / 0.36) - 1.0).abs() < 0.05, "variance {v}");
        let lag1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (x.len() - 1) as f64;
        assert!((lag1 / v - 0.8).abs() < 0.02);
    }

    #[test]
    fn ar1_rejects_unstable() {
        assert!(gen_ar1(1.0, 10, 0).is_err());
        assert_eq!(gen_ar1(0.8, 100, 5).unwrap(), gen_ar1(0.8, 100, 5).unwrap());
    }

    #[test]
    fn snr_scaling() {
        let ones = vec![1.0; 100];
        assert!((noise_variance_for_snr(&ones, 30.0).unwrap() - 1e-3).abs() < 1e-15);
        assert!((noise_variance_for_snr(&ones, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = noise_variance_for_snr(&x, 20.0).unwrap();
        let b = noise_variance_for_snr(&x2, 20.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
        assert!(noise_variance_for_snr(&[0.0; 4], 30.0).is_err());
        assert!(noise_variance_for_snr(&[], 30.0).is_err());
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let sine: Vec<f64> = (0..8000)
            .map(|n| 0.5 * (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / 8000.0).sin())
            .collect();
        write_wav(&path, &sine, 8000).unwrap();
        let first = load_wav(&path).unwrap();
        assert_eq!(first.samples.len(), 8000);
        assert_eq!(first.sample_rate, 8000);
        assert!(first.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
        write_wav(&path, &first.samples, 8000).unwrap();
        assert_eq!(load_wav(&path).unwrap(), first);
    }

    #[test]
    fn wav_rejects_empty_and_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.wav");
        write_wav(&empty, &[], 8000).unwrap();
        assert!(load_wav(&empty).is_err());

        let stereo = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            load_wav(&stereo),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
