//! Fixtures and reference implementations shared by the integration tests
//! and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use proxsaf::experiments::{seeded_rng, write_wav, ChannelModel};
use proxsaf::filterbank::{
    estimate_subband_statistics, AnalysisBank, SubbandFrame, SubbandStatistics,
};
use rand::Rng;
use rand_distr::StandardNormal;

pub const AR_COEFFICIENT: f64 = 0.8;

/// Network echo path of length 512 with a 64-tap dispersive region, shaped
/// like the G.168 hybrid models (bulk delay, damped oscillation).
pub fn network_echo_path() -> Vec<f64> {
    let mut h = vec![0.0; 512];
    for j in 0..64 {
        let t = j as f64;
        h[40 + j] = (-t / 14.0).exp() * (2.0 * PI * 0.11 * t + 0.4).cos();
    }
    h
}

/// Room-like echo path: bulk delay followed by an exponentially decaying
/// Gaussian tail, unit energy.
pub fn acoustic_echo_path(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed, 7);
    let delay = 24;
    let mut h = vec![0.0; len];
    for (n, tap) in h.iter_mut().enumerate().skip(delay) {
        let g: f64 = rng.sample(StandardNormal);
        *tap = g * (-((n - delay) as f64) / 60.0).exp();
    }
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    h.iter_mut().for_each(|x| *x /= norm);
    h
}

/// Writes `taps` to `dir/name` and loads it back through the channel reader.
pub fn load_fixture_channel(dir: &Path, name: &str, taps: &[f64]) -> ChannelModel {
    let path = dir.join(name);
    ChannelModel::new(taps.to_vec()).export(&path).unwrap();
    ChannelModel::load(&path).unwrap()
}

/// Speech-like test signal: syllables of voiced (pulse train through two
/// formant resonators) or unvoiced (noise through a high resonator)
/// excitation, separated by pauses, peak-normalised to 0.5.
pub fn speech_like(seconds: f64, sample_rate: u32, seed: u64) -> Vec<f64> {
    let fs = sample_rate as f64;
    let total = (seconds * fs) as usize;
    let mut rng = seeded_rng(seed, 11);
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let syllable = (rng.random_range(0.12..0.32) * fs) as usize;
        let pause = (rng.random_range(0.04..0.2) * fs) as usize;
        let voiced = rng.random_bool(0.75);
        let pitch = rng.random_range(95.0..210.0);
        let f1 = rng.random_range(350.0..900.0);
        let f2 = rng.random_range(1000.0..2600.0);
        let mut r1 = Resonator::new(f1, 80.0, fs);
        let mut r2 = Resonator::new(f2, 120.0, fs);
        let mut r3 = Resonator::new(3200.0, 600.0, fs);
        let mut phase = 0.0;
        for n in 0..syllable {
            let env = (PI * n as f64 / syllable as f64).sin().powi(2);
            let x = if voiced {
                phase += pitch / fs;
                let pulse = if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                };
                let v = r1.process(pulse);
                v + 0.5 * r2.process(v)
            } else {
                r3.process(rng.sample::<f64, _>(StandardNormal) * 0.3)
            };
            out.push(env * x);
        }
        for _ in 0..pause {
            out.push(1e-3 * rng.sample::<f64, _>(StandardNormal));
        }
    }
    out.truncate(total);
    let peak = out.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    out.iter_mut().for_each(|x| *x *= 0.5 / peak);
    out
}

/// Writes a speech-like WAV of the given length.
pub fn write_speech_wav(path: &Path, seconds: f64, sample_rate: u32, seed: u64) {
    write_wav(path, &speech_like(seconds, sample_rate, seed), sample_rate).unwrap();
}

struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, fs: f64) -> Self {
        let r = (-PI * bandwidth / fs).exp();
        Self {
            a1: 2.0 * r * (2.0 * PI * freq / fs).cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Subband correlations for the AR(1) input used throughout.
pub fn ar1_statistics(
    bank: &Arc<AnalysisBank>,
    m: usize,
    frames: usize,
    seed: u64,
) -> SubbandStatistics {
    let mut rng = seeded_rng(seed, 3);
    let mut x = 0.0;
    for _ in 0..1000 {
        x = AR_COEFFICIENT * x + rng.sample::<f64, _>(StandardNormal);
    }
    estimate_subband_statistics(
        bank,
        || {
            x = AR_COEFFICIENT * x + rng.sample::<f64, _>(StandardNormal);
            x
        },
        m,
        frames,
    )
    .unwrap()
}

/// `E{(uᵀw)²}` for the stationary AR(1) process with unit-variance drive.
pub fn ar1_echo_power(w: &[f64], a: f64) -> f64 {
    let var = 1.0 / (1.0 - a * a);
    let mut total = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            total += wi * wj * var * a.powi((i as i32 - j as i32).abs());
        }
    }
    total
}

/// Textbook NSAF: `w += μ Σ_i u_i e_i / (‖u_i‖² + δ)`.
pub fn reference_nsaf(w: &mut [f64], frame: &SubbandFrame, mu: f64, delta: f64) {
    let errors: Vec<f64> = frame
        .regressors()
        .zip(frame.desired())
        .map(|(u, d)| d - u.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    for (u, e) in frame.regressors().zip(&errors) {
        let energy: f64 = u.iter().map(|x| x * x).sum();
        let step = mu * e / (energy + delta);
        for (wm, um) in w.iter_mut().zip(u) {
            *wm += step * um;
        }
    }
}

/// Textbook PNSAF with the simplified proportionate rule:
/// `w += μ Σ_i G u_i e_i / (u_iᵀ G u_i + δ)`.
pub fn reference_pnsaf(
    w: &mut [f64],
    frame: &SubbandFrame,
    mu: f64,
    delta: f64,
    zeta: f64,
    eps: f64,
) {
    let m = w.len() as f64;
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    let g: Vec<f64> = w
        .iter()
        .map(|x| (1.0 - zeta) / (2.0 * m) + (1.0 + zeta) * x.abs() / (2.0 * l1 + eps))
        .collect();
    let errors: Vec<f64> = frame
        .regressors()
        .zip(frame.desired())
        .map(|(u, d)| d - u.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    for (u, e) in frame.regressors().zip(&errors) {
        let energy: f64 = u.iter().zip(&g).map(|(x, gm)| gm * x * x).sum();
        let step = mu * e / (energy + delta);
        for ((wm, um), gm) in w.iter_mut().zip(u).zip(&g) {
            *wm += step * gm * um;
        }
    }
}

/// `‖a − b‖ / ‖b‖` (or `‖a‖` when `b = 0`).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// Brute-force minimiser of `t|x| + ½(ψ − x)²` on a uniform grid of spacing
/// `step` spanning `[min(0, ψ), max(0, ψ)]` (the minimiser always lies there).
pub fn grid_prox(psi: f64, t: f64, step: f64) -> f64 {
    let objective = |x: f64| t * x.abs() + 0.5 * (psi - x).powi(2);
    let span = psi.abs();
    let count = (span / step).ceil() as usize;
    let mut best = (0.0, objective(0.0));
    for j in 1..=count {
        let x = psi.signum() * (j as f64 * step).min(span);
        let f = objective(x);
        if f < best.1 {
            best = (x, f);
        }
    }
    best.0
}
