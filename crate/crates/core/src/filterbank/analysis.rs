use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::prototype::{builtin_length, PrototypeFilter};
use crate::error::{Error, Result};

/// N cosine-modulated analysis filters sharing one prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBank {
    filters: Vec<Vec<f64>>,
    prototype: PrototypeFilter,
}

impl AnalysisBank {
    /// Cosine-modulates `prototype` into `N` bandpass filters.
    ///
    /// Uses the pseudo-QMF modulation
    /// `h_i(n) = 2 p(n) cos((2i+1)·π/(2N)·(n − (L−1)/2) + (−1)^i·π/4)`,
    /// whose passbands are centred on `(2i+1)π/(2N)` and tile `[0, π]`.
    /// A single-band prototype is used as-is.
    pub fn modulate_cosine(prototype: PrototypeFilter) -> Self {
        let n_bands = prototype.num_subbands();
        let filters = if n_bands == 1 {
            vec![prototype.coefficients().to_vec()]
        } else {
            let center = (prototype.len() as f64 - 1.0) / 2.0;
            (0..n_bands)
                .map(|i| {
                    let freq = (2 * i + 1) as f64 * PI / (2 * n_bands) as f64;
                    let phase = if i % 2 == 0 { FRAC_PI_4 } else { -FRAC_PI_4 };
                    prototype
                        .coefficients()
                        .iter()
                        .enumerate()
                        .map(|(n, p)| 2.0 * p * (freq * (n as f64 - center) + phase).cos())
                        .collect()
                })
                .collect()
        };
        Self { filters, prototype }
    }

    /// Designs and modulates the built-in bank for `num_subbands` ∈ {1, 2, 4, 8}.
    pub fn builtin(num_subbands: usize) -> Result<Self> {
        let length = builtin_length(num_subbands).ok_or(Error::UnsupportedPrototype {
            num_subbands,
            length: 0,
        })?;
        Ok(Self::modulate_cosine(PrototypeFilter::design(
            num_subbands,
            length,
        )?))
    }

    /// Trivial fullband bank `{[1]}`.
    pub fn identity() -> Self {
        Self::modulate_cosine(
            PrototypeFilter::from_coefficients(1, vec![1.0]).expect("unit prototype is valid"),
        )
    }

    pub fn num_subbands(&self) -> usize {
        self.filters.len()
    }

    pub fn filter_length(&self) -> usize {
        self.prototype.len()
    }

    pub fn filter(&self, i: usize) -> &[f64] {
        &self.filters[i]
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn prototype(&self) -> &PrototypeFilter {
        &self.prototype
    }

    /// `‖h_i‖²` for each band.
    pub fn energies(&self) -> Vec<f64> {
        self.filters
            .iter()
            .map(|h| h.iter().map(|c| c * c).sum())
            .collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.energies().iter().sum()
    }

    /// Decimated subband noise variances `σ²_{v,i} = ‖h_i‖²·σ_v²`.
    pub fn subband_noise_variances(&self, fullband_noise_variance: f64) -> Result<Vec<f64>> {
        if !(fullband_noise_variance >= 0.0) {
            return Err(Error::invalid(
                "fullband_noise_variance",
                format!("must be non-negative, got {fullband_noise_variance}"),
            ));
        }
        Ok(self
            .energies()
            .into_iter()
            .map(|e| e * fullband_noise_variance)
            .collect())
    }
}

/// Fixed-length history, newest sample first.
///
/// Every sample is written twice into a buffer of twice the length so that
/// the window is always one contiguous slice.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    pos: usize,
    len: usize,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "delay line must hold at least one sample");
        Self {
            buf: vec![0.0; 2 * len],
            pos: 0,
            len,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.pos = if self.pos == 0 {
            self.len - 1
        } else {
            self.pos - 1
        };
        self.buf[self.pos] = x;
        self.buf[self.pos + self.len] = x;
    }

    /// `[x(n), x(n−1), …, x(n−len+1)]`.
    pub fn window(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|x| *x = 0.0);
        self.pos = 0;
    }
}

/// Subband regressors and decimated desired samples at one decimated index.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFrame {
    pub iteration: usize,
    filter_length: usize,
    regressors: Vec<f64>,
    desired: Vec<f64>,
}

impl SubbandFrame {
    pub fn zeros(num_subbands: usize, filter_length: usize) -> Self {
        Self {
            iteration: 0,
            filter_length,
            regressors: vec![0.0; num_subbands * filter_length],
            desired: vec![0.0; num_subbands],
        }
    }

    /// Builds a frame from explicit regressors and desired values.
    pub fn from_parts(
        iteration: usize,
        regressors: Vec<Vec<f64>>,
        desired: Vec<f64>,
    ) -> Result<Self> {
        if regressors.len() != desired.len() || regressors.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "frame subbands",
                expected: desired.len(),
                actual: regressors.len(),
            });
        }
        let m = regressors[0].len();
        if let Some(bad) = regressors.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                context: "frame regressor length",
                expected: m,
                actual: bad.len(),
            });
        }
        Ok(Self {
            iteration,
            filter_length: m,
            regressors: regressors.concat(),
            desired,
        })
    }

    pub fn num_subbands(&self) -> usize {
        self.desired.len()
    }

    pub fn filter_length(&self) -> usize {
        self.filter_length
    }

    /// `u_i(k)`, newest sample first.
    pub fn regressor(&self, i: usize) -> &[f64] {
        &self.regressors[i * self.filter_length..(i + 1) * self.filter_length]
    }

    pub fn regressors(&self) -> impl Iterator<Item = &[f64]> {
        self.regressors.chunks_exact(self.filter_length)
    }

    /// `d_{i,D}(k)` for every band.
    pub fn desired(&self) -> &[f64] {
        &self.desired
    }
}

/// Streaming analysis stage: splits fullband input/desired into subband frames.
///
/// Delay lines start at zero. Each [`advance_frame`](Self::advance_frame)
/// consumes exactly `N` samples of each stream.
#[derive(Debug, Clone)]
pub struct SubbandAnalyzer {
    bank: Arc<AnalysisBank>,
    input_history: DelayLine,
    desired_history: DelayLine,
    subband_inputs: Vec<DelayLine>,
    frame: SubbandFrame,
    frames_emitted: usize,
}

impl SubbandAnalyzer {
    pub fn new(bank: Arc<AnalysisBank>, filter_length: usize) -> Self {
        assert!(filter_length > 0, "adaptive filter length must be positive");
        let n = bank.num_subbands();
        let l = bank.filter_length();
        Self {
            input_history: DelayLine::new(l),
            desired_history: DelayLine::new(l),
            subband_inputs: (0..n).map(|_| DelayLine::new(filter_length)).collect(),
            frame: SubbandFrame::zeros(n, filter_length),
            frames_emitted: 0,
            bank,
        }
    }

    pub fn bank(&self) -> &Arc<AnalysisBank> {
        &self.bank
    }

    pub fn num_subbands(&self) -> usize {
        self.bank.num_subbands()
    }

    pub fn frames_emitted(&self) -> usize {
        self.frames_emitted
    }

    /// Consumes the first `N` samples of `input` and `desired` and returns the frame
    /// at the next decimated index. Leaves all state untouched if either slice is
    /// shorter than `N`.
    pub fn advance_frame(&mut self, input: &[f64], desired: &[f64]) -> Result<&SubbandFrame> {
        let n = self.num_subbands();
        let available = input.len().min(desired.len());
        if available < n {
            return Err(Error::NeedMoreInput {
                needed: n,
                available,
            });
        }
        for (&u, &d) in input[..n].iter().zip(&desired[..n]) {
            self.input_history.push(u);
            self.desired_history.push(d);
            let history = self.input_history.window();
            for (h, line) in self.bank.filters.iter().zip(self.subband_inputs.iter_mut()) {
                line.push(dot(h, history));
            }
        }
        let m = self.frame.filter_length;
        let d_history = self.desired_history.window();
        for (i, (h, line)) in self
            .bank
            .filters
            .iter()
            .zip(&self.subband_inputs)
            .enumerate()
        {
            self.frame.desired[i] = dot(h, d_history);
            self.frame.regressors[i * m..(i + 1) * m].copy_from_slice(line.window());
        }
        self.frame.iteration = self.frames_emitted;
        self.frames_emitted += 1;
        Ok(&self.frame)
    }

    pub fn reset(&mut self) {
        self.input_history.clear();
        self.desired_history.clear();
        self.subband_inputs.iter_mut().for_each(DelayLine::clear);
        let n = self.num_subbands();
        self.frame = SubbandFrame::zeros(n, self.frame.filter_length);
        self.frames_emitted = 0;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identity_bank_is_unit_filter() {
        let bank = AnalysisBank::identity();
        assert_eq!(bank.filters(), &[vec![1.0]]);
    }

    #[test]
    fn builtin_banks_are_near_unit_energy() {
        for n in [2, 4, 8] {
            let bank = AnalysisBank::builtin(n).unwrap();
            let total = bank.total_energy();
            assert!((total - 1.0).abs() <= 0.05, "N={n}: Σ‖h_i‖² = {total}");
            assert!(bank.energies().iter().all(|e| *e > 0.0 && e.is_finite()));
        }
    }

    #[test]
    fn impulse_reproduces_filter_taps() {
        let bank = Arc::new(AnalysisBank::builtin(4).unwrap());
        let l = bank.filter_length();
        // M = L so the regressor holds the whole impulse response.
        let mut an = SubbandAnalyzer::new(bank.clone(), l);
        let mut input = vec![0.0; 36];
        input[0] = 1.0;
        let desired = vec![0.0; 36];
        let mut last = None;
        for chunk in 0..9 {
            last = Some(
                an.advance_frame(&input[4 * chunk..], &desired[4 * chunk..])
                    .unwrap()
                    .clone(),
            );
        }
        // After 36 samples the newest-first regressor covers u_i(35)..u_i(3).
        let frame = last.unwrap();
        for i in 0..4 {
            let reg = frame.regressor(i);
            for (lag, value) in reg.iter().enumerate() {
                let n = 35 - lag as isize;
                let expected = if (0..l as isize).contains(&n) {
                    bank.filter(i)[n as usize]
                } else {
                    0.0
                };
                assert_eq!(*value, expected);
            }
        }
    }

    #[test]
    fn degenerate_bank_gives_fullband_regressor() {
        let mut an = SubbandAnalyzer::new(Arc::new(AnalysisBank::identity()), 3);
        let input = [1.0, 2.0, 3.0, 4.0];
        let desired = [0.5, 0.25, 0.0, -1.0];
        let mut frames = Vec::new();
        for n in 0..4 {
            frames.push(
                an.advance_frame(&input[n..], &desired[n..])
                    .unwrap()
                    .clone(),
            );
        }
        assert_eq!(frames[3].regressor(0), &[4.0, 3.0, 2.0]);
        assert_eq!(frames[3].desired(), &[-1.0]);
        assert_eq!(frames[0].regressor(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_streams_give_zero_frames() {
        let mut an = SubbandAnalyzer::new(Arc::new(AnalysisBank::builtin(2).unwrap()), 8);
        let zeros = [0.0; 2];
        for _ in 0..20 {
            let f = an.advance_frame(&zeros, &zeros).unwrap();
            assert!(f.regressors().flatten().all(|x| *x == 0.0));
            assert!(f.desired().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn short_input_leaves_state_untouched() {
        let mut an = SubbandAnalyzer::new(Arc::new(AnalysisBank::builtin(4).unwrap()), 8);
        an.advance_frame(&[1.0; 4], &[1.0; 4]).unwrap();
        let before = an.clone();
        let err = an.advance_frame(&[1.0; 3], &[1.0; 4]).unwrap_err();
        assert!(matches!(
            err,
            Error::NeedMoreInput {
                needed: 4,
                available: 3
            }
        ));
        assert_eq!(an.frames_emitted(), before.frames_emitted());
        assert_eq!(an.frame, before.frame);
        assert_eq!(an.input_history.window(), before.input_history.window());
    }

    #[test]
    fn white_input_subband_variance_tracks_filter_energy() {
        let bank = Arc::new(AnalysisBank::builtin(4).unwrap());
        let mut an = SubbandAnalyzer::new(bank.clone(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sums = [0.0; 4];
        let frames = 100_000;
        let mut buf = [0.0; 4];
        for _ in 0..frames {
            buf.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let f = an.advance_frame(&buf, &buf).unwrap();
            for (i, s) in sums.iter_mut().enumerate() {
                *s += f.regressor(i)[0].powi(2);
            }
        }
        for (i, e) in bank.energies().iter().enumerate() {
            let var = sums[i] / frames as f64;
            assert!((var / e - 1.0).abs() < 0.05, "band {i}: {var} vs {e}");
        }
    }

    #[test]
    fn noise_variances() {
        let bank = AnalysisBank::identity();
        assert_eq!(bank.subband_noise_variances(0.001).unwrap(), vec![0.001]);
        let bank4 = AnalysisBank::builtin(4).unwrap();
        assert!(bank4
            .subband_noise_variances(0.0)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        let v = bank4.subband_noise_variances(1.0).unwrap();
        let direct: f64 = bank4.filters().iter().flatten().map(|c| c * c).sum();
        assert!((v.iter().sum::<f64>() - direct).abs() < 1e-12);
        assert!(bank4.subband_noise_variances(-1.0).is_err());
    }
}
