//! Turns a validated [`Config`] into library objects.

use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use proxsaf::adaptive::{FilterParams, ProportionateRule, ThresholdMode};
use proxsaf::experiments::{
    load_wav, ChangeSchedule, ChannelModel, ExperimentConfig, InputSource, SpreadReading,
};
use proxsaf::filterbank::{AnalysisBank, PrototypeFilter};

use crate::config::{
    defaults, AlgorithmKind, AlgorithmSpec, ChannelKind, Config, InputKind, RuleKind, Spread,
};

/// Everything shared by the algorithms of one config.
pub struct Setup {
    pub bank: Arc<AnalysisBank>,
    pub channel: ChannelModel,
    pub input: InputSource,
    /// Mean power of a recorded input.
    pub recording_power: Option<f64>,
    pub samples: usize,
}

impl Setup {
    pub fn new(config: &Config) -> Result<Self> {
        let bank = Arc::new(bank(config)?);
        let channel = channel(config)?;
        let (input, recording_power) = input(config)?;
        let n = bank.num_subbands();
        let samples = match (config.run.samples, &input) {
            (Some(s), _) => s,
            (None, InputSource::Recorded(rec)) => {
                let skip = preroll_samples(config, &bank, channel.len());
                let usable = rec.len().saturating_sub(skip) / n * n;
                if usable == 0 {
                    bail!(
                        "input.path: recording has {} samples, too short for one iteration",
                        rec.len()
                    );
                }
                usable
            }
            (None, _) => defaults::SAMPLES,
        };
        Ok(Self {
            bank,
            channel,
            input,
            recording_power,
            samples,
        })
    }

    pub fn filter_length(&self) -> usize {
        self.channel.len()
    }

    pub fn iterations(&self) -> usize {
        self.samples / self.bank.num_subbands()
    }

    /// Library parameters for one algorithm.
    pub fn filter_params(&self, spec: &AlgorithmSpec) -> FilterParams {
        let m = self.filter_length();
        let n = self.bank.num_subbands();
        let regularization = spec
            .regularization
            .unwrap_or_else(|| match self.recording_power {
                Some(power) => {
                    let scale = if spec.name == AlgorithmKind::Nsaf {
                        n
                    } else {
                        m
                    };
                    defaults::SPEECH_REGULARIZATION * power / scale as f64
                }
                None => defaults::REGULARIZATION,
            });
        let rule = match spec.rule.unwrap_or(RuleKind::Simplified) {
            RuleKind::Simplified => ProportionateRule::Simplified {
                zeta: spec.zeta.unwrap_or(defaults::ZETA_STATIONARY),
                epsilon: spec.epsilon.unwrap_or(defaults::EPSILON),
            },
            RuleKind::Pnlms => ProportionateRule::Pnlms {
                rho: spec.rho.unwrap_or(defaults::RHO),
                gamma: spec.gamma.unwrap_or(defaults::GAMMA),
            },
        };
        match spec.name {
            AlgorithmKind::Nsaf => FilterParams::nsaf(spec.step_size, regularization, m),
            AlgorithmKind::Pnsaf => FilterParams::pnsaf(spec.step_size, regularization, rule),
            AlgorithmKind::PfbsPnsaf => FilterParams::pfbs_pnsaf(
                spec.step_size,
                regularization,
                rule,
                ThresholdMode::Fixed {
                    beta: spec.beta.unwrap_or(defaults::BETA),
                },
            ),
            AlgorithmKind::AutoPfbsPnsaf => FilterParams::pfbs_pnsaf(
                spec.step_size,
                regularization,
                rule,
                ThresholdMode::Auto {
                    tau: spec.tau.unwrap_or(0.0),
                },
            ),
        }
    }

    pub fn experiment(&self, config: &Config, spec: &AlgorithmSpec) -> ExperimentConfig {
        let run = &config.run;
        let mut exp = ExperimentConfig::new(
            self.filter_params(spec),
            self.bank.clone(),
            self.filter_length(),
        );
        exp.input = self.input.clone();
        exp.snr_db = config.input.snr_db;
        exp.trials = run.trials;
        exp.total_samples = self.samples;
        exp.seed = run.seed;
        exp.steady_state_window = run.steady_state_window;
        exp.divergence_factor = run.divergence_factor;
        exp.preroll = run.preroll;
        exp
    }
}

fn preroll_samples(config: &Config, bank: &AnalysisBank, m: usize) -> usize {
    if !config.run.preroll {
        return 0;
    }
    let n = bank.num_subbands();
    (m + bank.filter_length()).div_ceil(n) * n
}

fn bank(config: &Config) -> Result<AnalysisBank> {
    let fb = &config.filterbank;
    match &fb.prototype {
        None => Ok(AnalysisBank::builtin(fb.subbands)?),
        Some(path) => {
            let proto = PrototypeFilter::load(path)
                .with_context(|| format!("filterbank.prototype: cannot load {}", path.display()))?;
            if proto.num_subbands() != fb.subbands {
                bail!(
                    "filterbank.prototype: file declares N={} but filterbank.subbands = {}",
                    proto.num_subbands(),
                    fb.subbands
                );
            }
            Ok(AnalysisBank::modulate_cosine(proto))
        }
    }
}

fn channel(config: &Config) -> Result<ChannelModel> {
    let ch = &config.channel;
    let model = match ch.kind {
        ChannelKind::RandomSparse => {
            let reading = match ch.spread.unwrap_or_default() {
                Spread::Variance => SpreadReading::Variance,
                Spread::StdDev => SpreadReading::StdDev,
            };
            ChannelModel::random_sparse(
                ch.length.unwrap_or(0),
                ch.sparsity.unwrap_or(defaults::SPARSITY),
                ch.seed.unwrap_or(config.run.seed),
                reading,
            )?
        }
        ChannelKind::File => {
            let path = ch.path.as_ref().expect("validated");
            let model = ChannelModel::load(path)
                .with_context(|| format!("channel.path: cannot load {}", path.display()))?;
            if let Some(m) = ch.length {
                if m != model.len() {
                    bail!(
                        "channel.length: config says {m} but {} has {} taps",
                        path.display(),
                        model.len()
                    );
                }
            }
            model
        }
    };
    Ok(match ch.change_at_sample {
        Some(at_sample) => model.with_change(ChangeSchedule {
            at_sample,
            shift_taps: ch.change_shift.unwrap_or(defaults::CHANGE_SHIFT),
        }),
        None => model,
    })
}

fn input(config: &Config) -> Result<(InputSource, Option<f64>)> {
    let input = &config.input;
    Ok(match input.kind {
        InputKind::Ar1 => (
            InputSource::Ar1 {
                coefficient: input.coefficient.unwrap_or(defaults::AR_COEFFICIENT),
            },
            None,
        ),
        InputKind::White => (InputSource::White, None),
        InputKind::Wav => {
            let path = input.path.as_ref().expect("validated");
            let wav = load_wav(path)
                .with_context(|| format!("input.path: cannot load {}", path.display()))?;
            let power = wav.samples.iter().map(|x| x * x).sum::<f64>() / wav.samples.len() as f64;
            if !(power > 0.0) {
                bail!("input.path: {} is silent", path.display());
            }
            (InputSource::Recorded(Arc::new(wav.samples)), Some(power))
        }
    })
}
