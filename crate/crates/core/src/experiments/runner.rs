use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::channel::ChannelModel;
use super::metrics::{to_db, MetricSeries};
use super::seeded_rng;
use super::signals::{noise_variance_for_snr, InputSource};
use crate::adaptive::{FilterParams, FilterState};
use crate::error::{Error, Result};
use crate::filterbank::{dot, AnalysisBank, SubbandAnalyzer};

/// Everything a trial needs besides the channel.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: FilterParams,
    pub bank: Arc<AnalysisBank>,
    pub filter_length: usize,
    pub input: InputSource,
    pub snr_db: f64,
    pub trials: usize,
    /// Fullband samples per trial; `total_samples / N` iterations are run.
    pub total_samples: usize,
    pub seed: u64,
    pub steady_state_window: usize,
    /// A trial is declared diverged once its MSD exceeds this multiple of `‖w°‖²`.
    pub divergence_factor: f64,
    /// Also produce the delayless fullband error `e(n)` and microphone `d(n)`.
    pub fullband_error: bool,
    /// Run the signal path for [`ExperimentConfig::preroll_samples`] before
    /// adaptation starts, so that the first regressors are fully populated.
    pub preroll: bool,
}

impl ExperimentConfig {
    pub const DEFAULT_WINDOW: usize = 500;
    pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e6;

    pub fn new(params: FilterParams, bank: Arc<AnalysisBank>, filter_length: usize) -> Self {
        Self {
            params,
            bank,
            filter_length,
            input: InputSource::Ar1 { coefficient: 0.8 },
            snr_db: 30.0,
            trials: 100,
            total_samples: 40_000,
            seed: 0,
            steady_state_window: Self::DEFAULT_WINDOW,
            divergence_factor: Self::DEFAULT_DIVERGENCE_FACTOR,
            fullband_error: false,
            preroll: false,
        }
    }

    /// Whole frames covering the regressor length plus the analysis filter.
    pub fn preroll_samples(&self) -> usize {
        if !self.preroll {
            return 0;
        }
        let n = self.bank.num_subbands();
        (self.filter_length + self.bank.filter_length()).div_ceil(n) * n
    }

    pub fn iterations(&self) -> usize {
        self.total_samples / self.bank.num_subbands()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.input.validate()?;
        if self.filter_length == 0 {
            return Err(Error::invalid("filter_length", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.iterations() == 0 {
            return Err(Error::invalid(
                "samples",
                format!(
                    "need at least {} samples for one iteration, got {}",
                    self.bank.num_subbands(),
                    self.total_samples
                ),
            ));
        }
        if self.steady_state_window == 0 || self.steady_state_window > self.iterations() {
            return Err(Error::invalid(
                "steady_state_window",
                format!(
                    "must lie in [1, {}], got {}",
                    self.iterations(),
                    self.steady_state_window
                ),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db", "must be finite"));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::invalid("divergence_factor", "must exceed 1"));
        }
        Ok(())
    }
}

/// Per-coefficient averages over the steady-state window of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateStats {
    /// Mean of `g_m(k)`.
    pub gains: Vec<f64>,
    /// Mean of `w̃_m²(k)`.
    pub error_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    /// `‖w° − w(k+1)‖²` after iteration `k`; truncated at divergence.
    pub msd: Vec<f64>,
    /// Iteration at which the trial diverged.
    pub diverged_at: Option<usize>,
    pub steady: Option<SteadyStateStats>,
    /// Microphone signal `d(n)` (only with `fullband_error`).
    pub desired: Vec<f64>,
    /// Delayless residual `e(n) = d(n) − uᵀ(n)w` (only with `fullband_error`).
    pub error: Vec<f64>,
    pub noise_variance: f64,
    pub final_weights: Vec<f64>,
}

/// Runs trial number `trial` of `config` against `channel`.
///
/// Input and noise are drawn from a stream determined by `(config.seed, trial)`.
pub fn run_trial(
    config: &ExperimentConfig,
    channel: &ChannelModel,
    trial: usize,
) -> Result<TrialOutput> {
    config.validate()?;
    let m = config.filter_length;
    if channel.len() != m {
        return Err(Error::DimensionMismatch {
            context: "channel length",
            expected: m,
            actual: channel.len(),
        });
    }
    let n_bands = config.bank.num_subbands();
    let iterations = config.iterations();
    let skip = config.preroll_samples();
    let total = skip + iterations * n_bands;
    let mut rng = seeded_rng(config.seed, trial as u64);

    let input = config.input.generate(total, &mut rng)?;
    let changed = channel.apply_sudden_change();
    let clean: Vec<f64> = (0..total)
        .map(|n| {
            let w = channel.response_at(n.saturating_sub(skip), &changed);
            let lags = (n + 1).min(m);
            (0..lags).map(|j| w[j] * input[n - j]).sum()
        })
        .collect();
    let noise_variance = noise_variance_for_snr(&clean, config.snr_db)?;
    let noise_std = noise_variance.sqrt();
    let desired: Vec<f64> = clean
        .iter()
        .map(|c| c + noise_std * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut filter = FilterState::new(m, n_bands, config.params)?;
    let mut analyzer = SubbandAnalyzer::new(config.bank.clone(), m);
    let reference_energy: f64 = channel
        .impulse_response
        .iter()
        .chain(&changed.impulse_response)
        .map(|w| w * w)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let limit = config.divergence_factor * reference_energy;

    let window = config.steady_state_window;
    let mut steady_gains = vec![0.0; m];
    let mut steady_err = vec![0.0; m];
    let mut msd = Vec::with_capacity(iterations);
    let mut error = Vec::new();
    let mut fullband = Vec::new();
    if config.fullband_error {
        error.reserve(total);
        fullband = vec![0.0; m];
    }
    let mut diverged_at = None;

    for start in (0..skip).step_by(n_bands) {
        let span = start..start + n_bands;
        analyzer.advance_frame(&input[span.clone()], &desired[span.clone()])?;
        if config.fullband_error {
            for n in span {
                fullband.rotate_right(1);
                fullband[0] = input[n];
            }
        }
    }

    for k in 0..iterations {
        let span = skip + k * n_bands..skip + (k + 1) * n_bands;
        if config.fullband_error {
            let w = filter.weights();
            for n in span.clone() {
                fullband.rotate_right(1);
                fullband[0] = input[n];
                error.push(desired[n] - dot(&fullband, w));
            }
        }
        let frame = analyzer.advance_frame(&input[span.clone()], &desired[span.clone()])?;
        if let Err(e) = filter.iterate(frame) {
            match e {
                Error::Diverged { .. } => {
                    diverged_at = Some(k);
                    break;
                }
                other => return Err(other),
            }
        }
        let target = channel.response_at(span.end - 1 - skip, &changed);
        let dev: f64 = target
            .iter()
            .zip(filter.weights())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        if !dev.is_finite() || dev > limit {
            diverged_at = Some(k);
            break;
        }
        if k + window >= iterations {
            for (((g, e), gk), (a, b)) in steady_gains
                .iter_mut()
                .zip(&mut steady_err)
                .zip(filter.gains())
                .zip(target.iter().zip(filter.weights()))
            {
                *g += gk;
                *e += (a - b).powi(2);
            }
        }
        msd.push(dev);
    }

    let steady = diverged_at.is_none().then(|| {
        let scale = 1.0 / window as f64;
        SteadyStateStats {
            gains: steady_gains.iter().map(|g| g * scale).collect(),
            error_power: steady_err.iter().map(|e| e * scale).collect(),
        }
    });
    if diverged_at.is_some() {
        log::warn!("trial {trial} diverged at iteration {}", msd.len());
    }
    Ok(TrialOutput {
        msd,
        diverged_at,
        steady,
        desired: if config.fullband_error {
            desired[skip..].to_vec()
        } else {
            Vec::new()
        },
        error,
        noise_variance,
        final_weights: filter.weights().to_vec(),
    })
}

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel over trials; `None` uses every available core.
    #[default]
    Parallel,
    ParallelWith {
        workers: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub msd: MetricSeries,
    /// Mean of the final window of the averaged MSD, in dB.
    pub steady_state_msd_db: Option<f64>,
    /// `(trial, iteration)` for every excluded trial.
    pub diverged_trials: Vec<(usize, usize)>,
    /// Steady-state per-coefficient averages over the contributing trials.
    pub steady: Option<SteadyStateStats>,
}

/// Averages `config.trials` independent trials in the linear domain.
///
/// Diverged trials are excluded and reported. The reduction runs in trial
/// order, so the result does not depend on scheduling.
pub fn monte_carlo(
    config: &ExperimentConfig,
    channel: &ChannelModel,
    execution: Execution,
) -> Result<MonteCarloResult> {
    config.validate()?;
    let outputs = run_trials(config, channel, execution)?;
    Ok(aggregate(config, outputs))
}

fn run_trials(
    config: &ExperimentConfig,
    channel: &ChannelModel,
    execution: Execution,
) -> Result<Vec<TrialOutput>> {
    let run = |t: usize| run_trial(config, channel, t);
    match execution {
        Execution::Sequential => (0..config.trials).map(run).collect(),
        Execution::Parallel => parallel_map(config.trials, None, run),
        Execution::ParallelWith { workers } => parallel_map(config.trials, Some(workers), run),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<TrialOutput>>
where
    F: Fn(usize) -> Result<TrialOutput> + Sync + Send,
{
    use rayon::prelude::*;
    let work = || (0..count).into_par_iter().map(&f).collect();
    match workers {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(work),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<F>(count: usize, _workers: Option<usize>, f: F) -> Result<Vec<TrialOutput>>
where
    F: Fn(usize) -> Result<TrialOutput>,
{
    log::debug!("built without the `parallel` feature; running trials sequentially");
    (0..count).map(f).collect()
}

fn aggregate(config: &ExperimentConfig, outputs: Vec<TrialOutput>) -> MonteCarloResult {
    let iterations = config.iterations();
    let m = config.filter_length;
    let mut sum = vec![0.0; iterations];
    let mut gains = vec![0.0; m];
    let mut err = vec![0.0; m];
    let mut good = 0usize;
    let mut diverged_trials = Vec::new();
    for (t, out) in outputs.into_iter().enumerate() {
        if let Some(k) = out.diverged_at {
            diverged_trials.push((t, k));
            continue;
        }
        good += 1;
        for (s, v) in sum.iter_mut().zip(&out.msd) {
            *s += v;
        }
        if let Some(st) = &out.steady {
            for (a, b) in gains.iter_mut().zip(&st.gains) {
                *a += b;
            }
            for (a, b) in err.iter_mut().zip(&st.error_power) {
                *a += b;
            }
        }
    }
    if !diverged_trials.is_empty() {
        log::warn!(
            "{} of {} trials diverged and were excluded",
            diverged_trials.len(),
            config.trials
        );
    }
    if good == 0 {
        return MonteCarloResult {
            msd: MetricSeries {
                linear: Vec::new(),
                trials: 0,
                diverged: diverged_trials.len(),
            },
            steady_state_msd_db: None,
            diverged_trials,
            steady: None,
        };
    }
    let scale = 1.0 / good as f64;
    let linear: Vec<f64> = sum.iter().map(|s| s * scale).collect();
    let series = MetricSeries {
        linear,
        trials: good,
        diverged: diverged_trials.len(),
    };
    let steady_state_msd_db = series
        .steady_state(config.steady_state_window)
        .ok()
        .map(|v| to_db(v).0);
    MonteCarloResult {
        msd: series,
        steady_state_msd_db,
        diverged_trials,
        steady: Some(SteadyStateStats {
            gains: gains.iter().map(|g| g * scale).collect(),
            error_power: err.iter().map(|e| e * scale).collect(),
        }),
    }
}
