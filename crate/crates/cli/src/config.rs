//! Experiment definition files.
//!
//! A config is a TOML document with the sections `algorithm`, `filterbank`,
//! `channel`, `input` and `run`. `algorithm` may be a bare name
//! (`algorithm = "nsaf"`), a single table, or an array of tables to run
//! several algorithms on the same channel. Omitted keys take the defaults
//! below; [`Config::normalize`] writes every default out explicitly so that the
//! normalized document reproduces a run on its own.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, IntoDeserializer, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use proxsaf::filterbank::builtin_length;

/// A config problem, located by its key path (e.g. `algorithm.step_size`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path == "." {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Nsaf,
    Pnsaf,
    PfbsPnsaf,
    AutoPfbsPnsaf,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Nsaf => "nsaf",
            AlgorithmKind::Pnsaf => "pnsaf",
            AlgorithmKind::PfbsPnsaf => "pfbs_pnsaf",
            AlgorithmKind::AutoPfbsPnsaf => "auto_pfbs_pnsaf",
        }
    }

    fn proportionate(self) -> bool {
        self != AlgorithmKind::Nsaf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Simplified,
    Pnlms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmKind,
    /// Used in output file names and columns; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "defaults::step_size")]
    pub step_size: f64,
    /// δ. Defaults to 0.001, or for WAV input to `20σ²/N` (NSAF) and `20σ²/M`
    /// (proportionate variants) with `σ²` the recording's power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
    /// Fixed β (`pfbs_pnsaf` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// τ of the automatic β (`auto_pfbs_pnsaf` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl AlgorithmSpec {
    pub fn named(name: AlgorithmKind) -> Self {
        Self {
            name,
            label: None,
            step_size: defaults::step_size(),
            regularization: None,
            beta: None,
            tau: None,
            rule: None,
            zeta: None,
            epsilon: None,
            rho: None,
            gamma: None,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.name.as_str())
    }
}

/// One or more algorithm definitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Algorithms(pub Vec<AlgorithmSpec>);

impl<'de> Deserialize<'de> for Algorithms {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AlgorithmsVisitor;

        impl<'de> Visitor<'de> for AlgorithmsVisitor {
            type Value = Algorithms;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an algorithm name, a table, or an array of tables")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Algorithms, E> {
                let name = AlgorithmKind::deserialize(v.into_deserializer())?;
                Ok(Algorithms(vec![AlgorithmSpec::named(name)]))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Algorithms, A::Error> {
                let spec = AlgorithmSpec::deserialize(de::value::MapAccessDeserializer::new(map))?;
                Ok(Algorithms(vec![spec]))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Algorithms, A::Error> {
                let mut out = Vec::new();
                while let Some(spec) = seq.next_element()? {
                    out.push(spec);
                }
                Ok(Algorithms(out))
            }
        }

        deserializer.deserialize_any(AlgorithmsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterbankSection {
    /// N. Without a prototype file it must be 1, 2, 4 or 8.
    pub subbands: usize,
    /// Prototype file: a `N=<n> L=<l>` header, then one coefficient per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototype: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[default]
    RandomSparse,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spread {
    /// Nonzero taps have variance `1/√Q`.
    #[default]
    Variance,
    /// Nonzero taps have standard deviation `1/√Q`.
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default)]
    pub kind: ChannelKind,
    /// M. Required for random channels; checked against the file otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Q, the number of nonzero taps of a random channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<Spread>,
    /// Seed of the random channel; defaults to `run.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// One coefficient per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Fullband sample (after any pre-roll) at which the echo path is shifted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_at_sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_shift: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    Ar1,
    White,
    Wav,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    #[serde(default)]
    pub kind: InputKind,
    /// AR(1) coefficient `a` in `u(n) = a·u(n−1) + θ(n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    /// 16-bit PCM mono WAV file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "defaults::snr_db")]
    pub snr_db: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        Self {
            kind: InputKind::default(),
            coefficient: None,
            path: None,
            snr_db: defaults::snr_db(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Experiment name used in the manifest; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    /// Fullband samples per trial. Defaults to 40000, or for WAV input to the
    /// whole recording after pre-roll.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::steady_state_window")]
    pub steady_state_window: usize,
    /// Fill the regressors before the first update.
    #[serde(default)]
    pub preroll: bool,
    /// A trial diverges once its MSD exceeds this multiple of `‖w°‖²`.
    #[serde(default = "defaults::divergence_factor")]
    pub divergence_factor: f64,
    /// MSD level for the iterations-to-threshold summary.
    #[serde(default = "defaults::threshold_db")]
    pub threshold_db: f64,
    /// χ of the ERLE power smoothers.
    #[serde(default = "defaults::erle_smoothing")]
    pub erle_smoothing: f64,
    /// Frames used to estimate subband correlations for the theory model.
    #[serde(default = "defaults::stats_frames")]
    pub stats_frames: usize,
    /// Iterations of the theory curve; defaults to `samples / N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_iterations: Option<usize>,
    /// First iteration included in the compare deviation.
    #[serde(default = "defaults::compare_from")]
    pub compare_from: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: None,
            trials: defaults::trials(),
            samples: None,
            seed: 0,
            steady_state_window: defaults::steady_state_window(),
            preroll: false,
            divergence_factor: defaults::divergence_factor(),
            threshold_db: defaults::threshold_db(),
            erle_smoothing: defaults::erle_smoothing(),
            stats_frames: defaults::stats_frames(),
            theory_iterations: None,
            compare_from: defaults::compare_from(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub algorithm: Algorithms,
    pub filterbank: FilterbankSection,
    pub channel: ChannelSection,
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub run: RunSection,
}

pub mod defaults {
    pub const SAMPLES: usize = 40_000;
    pub const REGULARIZATION: f64 = 1e-3;
    pub const BETA: f64 = 9e-5;
    pub const EPSILON: f64 = 1e-4;
    pub const RHO: f64 = 0.04;
    pub const GAMMA: f64 = 0.01;
    pub const AR_COEFFICIENT: f64 = 0.8;
    pub const SPARSITY: usize = 8;
    pub const CHANGE_SHIFT: usize = 12;
    /// ζ for stationary inputs and for speech.
    pub const ZETA_STATIONARY: f64 = 0.0;
    pub const ZETA_SPEECH: f64 = -0.5;
    /// δ multiplier for speech input.
    pub const SPEECH_REGULARIZATION: f64 = 20.0;

    pub fn step_size() -> f64 {
        0.5
    }
    pub fn snr_db() -> f64 {
        30.0
    }
    pub fn trials() -> usize {
        100
    }
    pub fn steady_state_window() -> usize {
        500
    }
    pub fn divergence_factor() -> f64 {
        1e6
    }
    pub fn threshold_db() -> f64 {
        -20.0
    }
    pub fn erle_smoothing() -> f64 {
        0.996
    }
    pub fn stats_frames() -> usize {
        40_000
    }
    pub fn compare_from() -> usize {
        10
    }
}

/// Values given on the command line take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

impl Config {
    /// Parses TOML text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let deserializer =
            toml::Deserializer::parse(text).map_err(|e| ConfigError::new(".", e.to_string()))?;
        let mut config: Config = serde_path_to_error::deserialize(deserializer).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(path, e.into_inner().message().trim().to_string())
        })?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    /// Reads a config file, applies command-line overrides, then normalizes
    /// and validates it.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(".", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config = Self::parse(&text, base)?;
        if config.run.name.is_none() {
            config.run.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        if let Some(seed) = overrides.seed {
            config.run.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            config.run.trials = trials;
        }
        config.normalize();
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.filterbank.prototype,
            &mut self.channel.path,
            &mut self.input.path,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Fills every default that depends on other sections.
    pub fn normalize(&mut self) {
        let speech = self.input.kind == InputKind::Wav;
        for spec in &mut self.algorithm.0 {
            if spec.label.is_none() {
                spec.label = Some(spec.name.as_str().to_string());
            }
            if speech {
                // Resolved from the recording at run time.
            } else if spec.regularization.is_none() {
                spec.regularization = Some(defaults::REGULARIZATION);
            }
            match spec.name {
                AlgorithmKind::PfbsPnsaf => {
                    spec.beta.get_or_insert(defaults::BETA);
                }
                AlgorithmKind::AutoPfbsPnsaf => {
                    spec.tau.get_or_insert(0.0);
                }
                _ => {}
            }
            if spec.name.proportionate() {
                match *spec.rule.get_or_insert(RuleKind::Simplified) {
                    RuleKind::Simplified => {
                        spec.zeta.get_or_insert(if speech {
                            defaults::ZETA_SPEECH
                        } else {
                            defaults::ZETA_STATIONARY
                        });
                        spec.epsilon.get_or_insert(defaults::EPSILON);
                    }
                    RuleKind::Pnlms => {
                        spec.rho.get_or_insert(defaults::RHO);
                        spec.gamma.get_or_insert(defaults::GAMMA);
                    }
                }
            }
        }
        // Labels name output files, so they must be distinct.
        let mut seen = std::collections::HashMap::<String, usize>::new();
        for spec in &mut self.algorithm.0 {
            let label = spec.label.clone().unwrap_or_default();
            let count = seen.entry(label.clone()).or_insert(0);
            *count += 1;
            if *count > 1 {
                spec.label = Some(format!("{label}-{count}"));
            }
        }

        let ch = &mut self.channel;
        if ch.kind == ChannelKind::RandomSparse {
            ch.sparsity.get_or_insert(defaults::SPARSITY);
            ch.spread.get_or_insert(Spread::Variance);
            ch.seed.get_or_insert(self.run.seed);
        }
        if ch.change_at_sample.is_some() {
            ch.change_shift.get_or_insert(defaults::CHANGE_SHIFT);
        }
        if self.input.kind == InputKind::Ar1 {
            self.input
                .coefficient
                .get_or_insert(defaults::AR_COEFFICIENT);
        }
        if !speech {
            self.run.samples.get_or_insert(defaults::SAMPLES);
            let n = self.filterbank.subbands.max(1);
            let iterations = self.run.samples.unwrap_or(0) / n;
            self.run.theory_iterations.get_or_insert(iterations);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.algorithm.0.is_empty() {
            return Err(ConfigError::new(
                "algorithm",
                "at least one algorithm is required",
            ));
        }
        let many = self.algorithm.0.len() > 1;
        for (i, spec) in self.algorithm.0.iter().enumerate() {
            let prefix = if many {
                format!("algorithm[{i}]")
            } else {
                "algorithm".to_string()
            };
            validate_algorithm(spec, &prefix)?;
        }

        let fb = &self.filterbank;
        if fb.subbands == 0 {
            return Err(ConfigError::new(
                "filterbank.subbands",
                "must be at least 1",
            ));
        }
        if fb.prototype.is_none() && builtin_length(fb.subbands).is_none() {
            return Err(ConfigError::new(
                "filterbank.subbands",
                format!(
                    "no built-in prototype for N={}; use 1, 2, 4 or 8 or set filterbank.prototype",
                    fb.subbands
                ),
            ));
        }

        let ch = &self.channel;
        match ch.kind {
            ChannelKind::RandomSparse => {
                let m = ch.length.ok_or_else(|| {
                    ConfigError::new("channel.length", "required for random channels")
                })?;
                if m == 0 {
                    return Err(ConfigError::new("channel.length", "must be positive"));
                }
                let q = ch.sparsity.unwrap_or(defaults::SPARSITY);
                if q == 0 || q > m {
                    return Err(ConfigError::new(
                        "channel.sparsity",
                        format!("must lie in [1, {m}], got {q}"),
                    ));
                }
                if ch.path.is_some() {
                    return Err(ConfigError::new(
                        "channel.path",
                        "only applies to kind = \"file\"",
                    ));
                }
            }
            ChannelKind::File => {
                if ch.path.is_none() {
                    return Err(ConfigError::new(
                        "channel.path",
                        "required for kind = \"file\"",
                    ));
                }
                for (key, set) in [
                    ("sparsity", ch.sparsity.is_some()),
                    ("spread", ch.spread.is_some()),
                    ("seed", ch.seed.is_some()),
                ] {
                    if set {
                        return Err(ConfigError::new(
                            format!("channel.{key}"),
                            "only applies to kind = \"random_sparse\"",
                        ));
                    }
                }
                if ch.length == Some(0) {
                    return Err(ConfigError::new("channel.length", "must be positive"));
                }
            }
        }
        if ch.change_shift.is_some() && ch.change_at_sample.is_none() {
            return Err(ConfigError::new(
                "channel.change_shift",
                "requires channel.change_at_sample",
            ));
        }

        let input = &self.input;
        match input.kind {
            InputKind::Ar1 => {
                let a = input.coefficient.unwrap_or(defaults::AR_COEFFICIENT);
                if !(a.abs() < 1.0) {
                    return Err(ConfigError::new(
                        "input.coefficient",
                        format!("must satisfy |a| < 1, got {a}"),
                    ));
                }
            }
            _ if input.coefficient.is_some() => {
                return Err(ConfigError::new(
                    "input.coefficient",
                    "only applies to kind = \"ar1\"",
                ));
            }
            _ => {}
        }
        match (input.kind, &input.path) {
            (InputKind::Wav, None) => {
                return Err(ConfigError::new(
                    "input.path",
                    "required for kind = \"wav\"",
                ))
            }
            (InputKind::Ar1 | InputKind::White, Some(_)) => {
                return Err(ConfigError::new(
                    "input.path",
                    "only applies to kind = \"wav\"",
                ))
            }
            _ => {}
        }
        if !input.snr_db.is_finite() {
            return Err(ConfigError::new("input.snr_db", "must be finite"));
        }

        let run = &self.run;
        if run.trials == 0 {
            return Err(ConfigError::new("run.trials", "must be at least 1"));
        }
        if let Some(samples) = run.samples {
            let n = fb.subbands.max(1);
            let iterations = samples / n;
            if iterations == 0 {
                return Err(ConfigError::new(
                    "run.samples",
                    format!("need at least {n} samples for one iteration, got {samples}"),
                ));
            }
            if run.steady_state_window == 0 || run.steady_state_window > iterations {
                return Err(ConfigError::new(
                    "run.steady_state_window",
                    format!(
                        "must lie in [1, {iterations}], got {}",
                        run.steady_state_window
                    ),
                ));
            }
        } else if run.steady_state_window == 0 {
            return Err(ConfigError::new(
                "run.steady_state_window",
                "must be at least 1",
            ));
        }
        if !(run.divergence_factor > 1.0) {
            return Err(ConfigError::new("run.divergence_factor", "must exceed 1"));
        }
        if !run.threshold_db.is_finite() {
            return Err(ConfigError::new("run.threshold_db", "must be finite"));
        }
        if !(run.erle_smoothing > 0.0 && run.erle_smoothing < 1.0) {
            return Err(ConfigError::new(
                "run.erle_smoothing",
                format!("must lie in (0, 1), got {}", run.erle_smoothing),
            ));
        }
        if run.stats_frames == 0 {
            return Err(ConfigError::new("run.stats_frames", "must be at least 1"));
        }
        if run.theory_iterations == Some(0) {
            return Err(ConfigError::new(
                "run.theory_iterations",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    /// The normalized document as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the normalized document, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn validate_algorithm(spec: &AlgorithmSpec, prefix: &str) -> Result<(), ConfigError> {
    let key = |k: &str| format!("{prefix}.{k}");
    let positive = |k: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::new(
                key(k),
                format!("must be positive, got {v}"),
            ))
        }
    };
    let non_negative = |k: &str, v: f64| {
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::new(
                key(k),
                format!("must be non-negative, got {v}"),
            ))
        }
    };
    let only_for = |k: &str, set: bool, which: &str| {
        if set {
            Err(ConfigError::new(key(k), format!("only applies to {which}")))
        } else {
            Ok(())
        }
    };

    positive("step_size", spec.step_size)?;
    if let Some(d) = spec.regularization {
        non_negative("regularization", d)?;
    }
    if let Some(label) = &spec.label {
        let clean = !label.is_empty()
            && label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !clean {
            return Err(ConfigError::new(
                key("label"),
                format!("must be non-empty and use only [A-Za-z0-9_-], got `{label}`"),
            ));
        }
    }
    match spec.beta {
        Some(b) if spec.name == AlgorithmKind::PfbsPnsaf => non_negative("beta", b)?,
        b => only_for("beta", b.is_some(), "pfbs_pnsaf")?,
    }
    match spec.tau {
        Some(t) if spec.name == AlgorithmKind::AutoPfbsPnsaf => non_negative("tau", t)?,
        t => only_for("tau", t.is_some(), "auto_pfbs_pnsaf")?,
    }
    if !spec.name.proportionate() {
        for (k, set) in [
            ("rule", spec.rule.is_some()),
            ("zeta", spec.zeta.is_some()),
            ("epsilon", spec.epsilon.is_some()),
            ("rho", spec.rho.is_some()),
            ("gamma", spec.gamma.is_some()),
        ] {
            only_for(k, set, "the proportionate algorithms")?;
        }
        return Ok(());
    }
    match spec.rule.unwrap_or(RuleKind::Simplified) {
        RuleKind::Simplified => {
            if let Some(z) = spec.zeta {
                if !(-1.0..1.0).contains(&z) {
                    return Err(ConfigError::new(
                        key("zeta"),
                        format!("must lie in [-1, 1), got {z}"),
                    ));
                }
            }
            if let Some(e) = spec.epsilon {
                positive("epsilon", e)?;
            }
            only_for("rho", spec.rho.is_some(), "rule = \"pnlms\"")?;
            only_for("gamma", spec.gamma.is_some(), "rule = \"pnlms\"")?;
        }
        RuleKind::Pnlms => {
            if let Some(r) = spec.rho {
                if !(r > 0.0 && r < 1.0) {
                    return Err(ConfigError::new(
                        key("rho"),
                        format!("must lie in (0, 1), got {r}"),
                    ));
                }
            }
            if let Some(g) = spec.gamma {
                positive("gamma", g)?;
            }
            only_for("zeta", spec.zeta.is_some(), "rule = \"simplified\"")?;
            only_for("epsilon", spec.epsilon.is_some(), "rule = \"simplified\"")?;
        }
    }
    Ok(())
}
