//! The `simulate`, `theory`, `compare` and `aec` subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _, Result};
use proxsaf::adaptive::FilterParams;
use proxsaf::experiments::{
    erle_series, iterations_to_threshold, max_deviation, monte_carlo, noise_variance_for_snr,
    recovery_index, run_trial, seeded_rng, steady_state_mean, to_db, Better, ErleSeries, Execution,
    InputSource, MonteCarloResult, DB_FLOOR,
};
use proxsaf::filterbank::{estimate_subband_statistics, SubbandStatistics};
use proxsaf::theory::{stability_bounds, steady_state_msd, MsdEmse, TheoryModel, TheoryParams};
use proxsaf::Error;

use crate::config::{AlgorithmSpec, Config};
use crate::output::Csv;
use crate::setup::Setup;

/// Random stream used for the input realization behind theory statistics.
const STATS_STREAM: u64 = u64::MAX - 1;
/// MSD re-convergence tolerance after an echo-path change.
const MSD_RECOVERY_DB: f64 = 1.0;
/// ERLE re-convergence tolerance after an echo-path change.
const ERLE_RECOVERY_DB: f64 = 3.0;
/// Fraction of the ERLE series averaged for the summary.
const ERLE_TAIL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Theory,
    Compare,
    Aec,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Theory => "theory",
            Command::Compare => "compare",
            Command::Aec => "aec",
        }
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Diverged trials per algorithm label.
    pub divergence: BTreeMap<String, usize>,
}

impl Report {
    /// Diverged trials are truncated at divergence and never re-enter the
    /// ensemble, so any divergence counts as unrecovered.
    pub fn unrecovered_divergence(&self) -> bool {
        self.divergence.values().any(|&d| d > 0)
    }
}

pub struct Context<'a> {
    pub config: &'a Config,
    pub setup: Setup,
    pub out_dir: &'a Path,
    pub execution: Execution,
    pub hash: String,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a Config, out_dir: &'a Path, workers: Option<usize>) -> Result<Self> {
        Ok(Self {
            config,
            setup: Setup::new(config)?,
            out_dir,
            execution: match workers {
                Some(workers) => Execution::ParallelWith { workers },
                None => Execution::Parallel,
            },
            hash: config.hash(),
        })
    }

    fn path(&self, name: String) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn execute(command: Command, ctx: &Context) -> Result<Report> {
    let mut report = Report::default();
    let theory = match command {
        Command::Theory | Command::Compare => {
            for spec in &ctx.config.algorithm.0 {
                theory_params(ctx, spec)?;
            }
            Some(theory_inputs(ctx)?)
        }
        _ => None,
    };
    for spec in &ctx.config.algorithm.0 {
        let label = spec.label();
        log::info!("{} {label}", command.as_str());
        match command {
            Command::Simulate => simulate(ctx, spec, &mut report)?,
            Command::Theory => theory_curve(ctx, spec, theory.as_ref().unwrap(), &mut report)?,
            Command::Compare => compare(ctx, spec, theory.as_ref().unwrap(), &mut report)?,
            Command::Aec => aec(ctx, spec, &mut report)?,
        }
    }
    Ok(report)
}

fn run_monte_carlo(
    ctx: &Context,
    spec: &AlgorithmSpec,
    report: &mut Report,
) -> Result<MonteCarloResult> {
    let exp = ctx.setup.experiment(ctx.config, spec);
    let mc = monte_carlo(&exp, &ctx.setup.channel, ctx.execution)
        .with_context(|| format!("simulating {}", spec.label()))?;
    report
        .divergence
        .insert(spec.label().to_string(), mc.diverged_trials.len());
    Ok(mc)
}

fn simulate(ctx: &Context, spec: &AlgorithmSpec, report: &mut Report) -> Result<()> {
    let label = spec.label();
    let mc = run_monte_carlo(ctx, spec, report)?;
    let db = mc.msd.db();
    let mut csv = Csv::new(&ctx.hash, &["k", "msd_db"]);
    for (k, v) in db.iter().enumerate() {
        csv.row(k, &[*v]);
    }
    let path = ctx.path(format!("msd_{label}.csv"));
    csv.write(&path)?;
    report.files.push(path);

    let run = &ctx.config.run;
    let s = &mut report.summary;
    writeln!(
        s,
        "[{label}] simulate: {} trials averaged, {} diverged",
        mc.msd.trials, mc.msd.diverged
    )?;
    match mc.steady_state_msd_db {
        Some(v) => writeln!(
            s,
            "  steady-state MSD: {v:.2} dB (last {} iterations)",
            run.steady_state_window
        )?,
        None => writeln!(s, "  steady-state MSD: unavailable (every trial diverged)")?,
    }
    match iterations_to_threshold(&mc.msd.linear, run.threshold_db) {
        Some(k) => writeln!(s, "  iterations to {} dB: {}", run.threshold_db, k + 1)?,
        None => writeln!(s, "  iterations to {} dB: never reached", run.threshold_db)?,
    }
    let clipped = mc.msd.clipped();
    if clipped > 0 {
        writeln!(s, "  values clipped at {DB_FLOOR} dB: {clipped}")?;
    }
    if let Some(change) = ctx.setup.channel.change_schedule {
        let kc = change.at_sample / ctx.setup.bank.num_subbands();
        match msd_reconvergence(&mc.msd.linear, kc, run.steady_state_window) {
            Some(Some(k)) => writeln!(s, "  re-converged within {MSD_RECOVERY_DB} dB at iteration {k} (change at {kc})")?,
            Some(None) => writeln!(s, "  did not re-converge within {MSD_RECOVERY_DB} dB after the change at iteration {kc}")?,
            None => {}
        }
    }
    for (trial, k) in &mc.diverged_trials {
        writeln!(s, "  trial {trial} diverged at iteration {k}")?;
    }
    Ok(())
}

/// First iteration after `change` whose MSD is back within the tolerance of
/// the pre-change level, or `None` when there is no pre-change segment.
fn msd_reconvergence(linear: &[f64], change: usize, window: usize) -> Option<Option<usize>> {
    if change == 0 || change >= linear.len() {
        return None;
    }
    let w = window.min(change);
    let before = steady_state_mean(&linear[..change], w).ok()?;
    let db: Vec<f64> = linear.iter().map(|x| to_db(*x).0).collect();
    Some(recovery_index(
        &db,
        change,
        to_db(before).0,
        MSD_RECOVERY_DB,
        Better::Lower,
    ))
}

struct TheoryInputs {
    stats: SubbandStatistics,
    noise_variances: Vec<f64>,
}

/// Subband correlations and noise powers from one long input realization.
fn theory_inputs(ctx: &Context) -> Result<TheoryInputs> {
    let setup = &ctx.setup;
    let bank = &setup.bank;
    let n = bank.num_subbands();
    let m = setup.filter_length();
    let warmup = (m + bank.filter_length()).div_ceil(n);
    let mut frames = ctx.config.run.stats_frames;
    if let InputSource::Recorded(rec) = &setup.input {
        let available = (rec.len() / n).saturating_sub(warmup);
        if available == 0 {
            return Err(anyhow!(
                "input.path: recording too short to estimate subband statistics"
            ));
        }
        if available < frames {
            log::warn!("recording covers only {available} frames; using them all for the theory statistics");
            frames = available;
        }
    }
    let total = (warmup + frames) * n;
    let mut rng = seeded_rng(ctx.config.run.seed, STATS_STREAM);
    let input = setup.input.generate(total, &mut rng)?;
    let w = &setup.channel.impulse_response;
    let clean: Vec<f64> = (0..total)
        .map(|i| (0..m.min(i + 1)).map(|j| w[j] * input[i - j]).sum())
        .collect();
    let noise = noise_variance_for_snr(&clean, ctx.config.input.snr_db)?;
    let mut samples = input.iter().copied();
    let stats = estimate_subband_statistics(bank, || samples.next().unwrap_or(0.0), m, frames)?;
    let noise_variances = stats.noise_variances(noise);
    Ok(TheoryInputs {
        stats,
        noise_variances,
    })
}

fn theory_model(
    ctx: &Context,
    spec: &AlgorithmSpec,
    inputs: &TheoryInputs,
) -> Result<(FilterParams, TheoryModel)> {
    let (params, theory_params) = theory_params(ctx, spec)?;
    let model = TheoryModel::new(
        inputs.stats.clone(),
        inputs.noise_variances.clone(),
        &ctx.setup.channel.impulse_response,
        theory_params,
    )?;
    Ok((params, model))
}

fn theory_params(ctx: &Context, spec: &AlgorithmSpec) -> Result<(FilterParams, TheoryParams)> {
    let params = ctx.setup.filter_params(spec);
    let theory = TheoryParams::from_filter(&params)
        .with_context(|| format!("algorithm `{}` has no theory model", spec.label()))?;
    Ok((params, theory))
}

/// Theory values after iterations `0..iterations`, aligned with simulated MSD.
fn aligned_curve(model: &TheoryModel, iterations: usize) -> Result<Vec<MsdEmse>> {
    let mut curve = model.run(iterations + 1)?;
    curve.remove(0);
    Ok(curve)
}

fn theory_curve(
    ctx: &Context,
    spec: &AlgorithmSpec,
    inputs: &TheoryInputs,
    report: &mut Report,
) -> Result<()> {
    let label = spec.label();
    let (params, model) = theory_model(ctx, spec, inputs)?;
    let iterations = ctx
        .config
        .run
        .theory_iterations
        .unwrap_or(ctx.setup.iterations());
    let curve = aligned_curve(&model, iterations)?;
    let mut csv = Csv::new(&ctx.hash, &["k", "msd_db", "emse_db"]);
    for (k, p) in curve.iter().enumerate() {
        csv.row(k, &[to_db(p.msd).0, to_db(p.emse).0]);
    }
    let path = ctx.path(format!("theory_{label}.csv"));
    csv.write(&path)?;
    report.files.push(path);

    let w = &ctx.setup.channel.impulse_response;
    let gains = params.rule.compute(w);
    let bounds = stability_bounds(&inputs.stats, &gains, params.regularization)?;
    let s = &mut report.summary;
    writeln!(s, "[{label}] theory over {iterations} iterations")?;
    if let Some(last) = curve.last() {
        writeln!(
            s,
            "  final MSD: {:.2} dB, final EMSE: {:.2} dB",
            to_db(last.msd).0,
            to_db(last.emse).0
        )?;
    }
    match steady_state_msd(
        &inputs.stats,
        &inputs.noise_variances,
        params.step_size,
        params.regularization,
        0.0,
    ) {
        Ok(v) => writeln!(
            s,
            "  steady-state MSD without sparsity correction: {:.2} dB",
            to_db(v.msd).0
        )?,
        Err(Error::Unstable { y }) => {
            writeln!(s, "  steady state: mean-square unstable (y = {y:.3e})")?
        }
        Err(e) => return Err(e.into()),
    }
    writeln!(
        s,
        "  mu_mean_max = {:.4}, mu_ms_max = {:.4}, mu_practical = {:.4}, mu_max = {:.4}",
        bounds.mu_mean_max,
        bounds.mu_ms_max,
        bounds.mu_practical,
        bounds.mu_max()
    )?;
    if params.step_size >= bounds.mu_max() {
        writeln!(
            s,
            "  step size {} is outside the stability bound",
            params.step_size
        )?;
    }
    Ok(())
}

fn compare(
    ctx: &Context,
    spec: &AlgorithmSpec,
    inputs: &TheoryInputs,
    report: &mut Report,
) -> Result<()> {
    let label = spec.label();
    let (_, model) = theory_model(ctx, spec, inputs)?;
    let mc = run_monte_carlo(ctx, spec, report)?;
    let sim = mc.msd.db();
    let theory: Vec<f64> = aligned_curve(&model, ctx.setup.iterations())?
        .iter()
        .map(|p| to_db(p.msd).0)
        .collect();
    let from = ctx.config.run.compare_from;
    let (k_max, deviation) =
        max_deviation(&sim, &theory, from).with_context(|| format!("comparing {label}"))?;
    let mut csv = Csv::new(&ctx.hash, &["k", "sim_msd_db", "theory_msd_db"]);
    for (k, (a, b)) in sim.iter().zip(&theory).enumerate() {
        csv.row(k, &[*a, *b]);
    }
    let path = ctx.path(format!("compare_{label}.csv"));
    csv.write(&path)?;
    report.files.push(path);

    let s = &mut report.summary;
    writeln!(
        s,
        "[{label}] compare: {} trials averaged, {} diverged",
        mc.msd.trials, mc.msd.diverged
    )?;
    writeln!(
        s,
        "  max |simulation - theory| for k >= {from}: {deviation:.3} dB at iteration {k_max}"
    )?;
    if let (Some(sim_ss), Some(th)) = (mc.steady_state_msd_db, theory.last()) {
        writeln!(
            s,
            "  steady state: simulation {sim_ss:.2} dB, theory {th:.2} dB"
        )?;
    }
    Ok(())
}

fn aec(ctx: &Context, spec: &AlgorithmSpec, report: &mut Report) -> Result<()> {
    let label = spec.label();
    let mut exp = ctx.setup.experiment(ctx.config, spec);
    exp.fullband_error = true;
    let smoothing = ctx.config.run.erle_smoothing;
    let mut sum: Vec<f64> = Vec::new();
    let mut clipped = 0;
    let mut good = 0usize;
    let mut diverged = Vec::new();
    for trial in 0..exp.trials {
        let out = run_trial(&exp, &ctx.setup.channel, trial)
            .with_context(|| format!("running {label} trial {trial}"))?;
        if let Some(k) = out.diverged_at {
            diverged.push((trial, k));
            continue;
        }
        let erle = erle_series(&out.desired, &out.error, smoothing)?;
        if sum.is_empty() {
            sum = vec![0.0; erle.values_db.len()];
        }
        for (a, b) in sum.iter_mut().zip(&erle.values_db) {
            *a += b;
        }
        clipped += erle.clipped;
        good += 1;
    }
    report.divergence.insert(label.to_string(), diverged.len());
    let values_db: Vec<f64> = sum.iter().map(|v| v / good.max(1) as f64).collect();
    let mut csv = Csv::new(&ctx.hash, &["n", "erle_db"]);
    for (n, v) in values_db.iter().enumerate() {
        csv.row(n, &[*v]);
    }
    let path = ctx.path(format!("erle_{label}.csv"));
    csv.write(&path)?;
    report.files.push(path);

    let s = &mut report.summary;
    writeln!(
        s,
        "[{label}] aec: {good} run(s) averaged, {} diverged",
        diverged.len()
    )?;
    if values_db.is_empty() {
        writeln!(s, "  ERLE: unavailable (every run diverged)")?;
    } else {
        let series = ErleSeries { values_db, clipped };
        writeln!(
            s,
            "  mean ERLE over the final {:.0}% of samples: {:.2} dB",
            ERLE_TAIL * 100.0,
            series.tail_mean(ERLE_TAIL)
        )?;
        if clipped > 0 {
            writeln!(s, "  samples with zero error power: {clipped}")?;
        }
        if let Some(change) = ctx.setup.channel.change_schedule {
            let at = change.at_sample;
            let values = &series.values_db;
            if at > 0 && at < values.len() {
                let head = &values[at - at.div_ceil(5)..at];
                let before = head.iter().sum::<f64>() / head.len() as f64;
                match recovery_index(values, at, before, ERLE_RECOVERY_DB, Better::Higher) {
                    Some(n) => writeln!(s, "  re-converged within {ERLE_RECOVERY_DB} dB at sample {n} (change at {at})")?,
                    None => writeln!(s, "  did not re-converge within {ERLE_RECOVERY_DB} dB after the change at sample {at}")?,
                }
            }
        }
    }
    for (trial, k) in &diverged {
        writeln!(s, "  run {trial} diverged at iteration {k}")?;
    }
    Ok(())
}
