use serde::{Deserialize, Serialize};

use super::gains::ProportionateRule;
use super::prox::{sign, soft_threshold_in_place};
use crate::error::{Error, Result};
use crate::filterbank::{dot, SubbandFrame};

/// How the sparsity threshold β is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Constant β. `β = 0` disables the proximal step.
    Fixed { beta: f64 },
    /// β recomputed every iteration from ψ(k+1) and a running estimate of w°.
    /// The step size is already folded into this β, so it is used as the
    /// soft-threshold level directly rather than scaled by μ.
    Auto { tau: f64 },
}

impl ThresholdMode {
    pub const OFF: ThresholdMode = ThresholdMode::Fixed { beta: 0.0 };
}

/// Hyperparameters shared by NSAF, PNSAF and PFBS-PNSAF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub step_size: f64,
    /// δ added to `u_iᵀ G u_i` in every band.
    pub regularization: f64,
    pub rule: ProportionateRule,
    pub threshold: ThresholdMode,
}

impl FilterParams {
    /// NSAF with `w += μ Σ u_i e_i / (‖u_i‖² + δ)`.
    ///
    /// Realised as the identity rule `G = I/M` with regularization `δ/M`, which
    /// is the same update term for term.
    pub fn nsaf(step_size: f64, regularization: f64, filter_length: usize) -> Self {
        Self {
            step_size,
            regularization: regularization / filter_length as f64,
            rule: ProportionateRule::Identity,
            threshold: ThresholdMode::OFF,
        }
    }

    pub fn pnsaf(step_size: f64, regularization: f64, rule: ProportionateRule) -> Self {
        Self {
            step_size,
            regularization,
            rule,
            threshold: ThresholdMode::OFF,
        }
    }

    pub fn pfbs_pnsaf(
        step_size: f64,
        regularization: f64,
        rule: ProportionateRule,
        threshold: ThresholdMode,
    ) -> Self {
        Self {
            step_size,
            regularization,
            rule,
            threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(
                "step_size",
                format!("must be positive, got {}", self.step_size),
            ));
        }
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return Err(Error::invalid(
                "regularization",
                format!("must be positive, got {}", self.regularization),
            ));
        }
        self.rule
            .validate()
            .map_err(|reason| Error::invalid("rule", reason))?;
        match self.threshold {
            ThresholdMode::Fixed { beta } if !(beta >= 0.0 && beta.is_finite()) => Err(
                Error::invalid("beta", format!("must be non-negative, got {beta}")),
            ),
            ThresholdMode::Auto { tau } if !(tau >= 0.0 && tau.is_finite()) => Err(Error::invalid(
                "tau",
                format!("must be non-negative, got {tau}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Decimated subband errors `e_{i,D}(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector(pub Vec<f64>);

impl ErrorVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `e_{i,D}(k) = d_{i,D}(k) − u_iᵀ(k) w`.
pub fn subband_errors(weights: &[f64], frame: &SubbandFrame) -> Result<ErrorVector> {
    check_frame(weights.len(), frame)?;
    Ok(ErrorVector(
        frame
            .regressors()
            .zip(frame.desired())
            .map(|(u, d)| d - dot(u, weights))
            .collect(),
    ))
}

/// Forward (proportionate gradient) step
/// `ψ = w + μ Σ_i G u_i e_i / (u_iᵀ G u_i + δ)`.
pub fn forward_step(
    weights: &[f64],
    gains: &[f64],
    step_size: f64,
    regularization: f64,
    frame: &SubbandFrame,
    errors: &ErrorVector,
) -> Result<Vec<f64>> {
    check_frame(weights.len(), frame)?;
    if gains.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "gains",
            expected: weights.len(),
            actual: gains.len(),
        });
    }
    if errors.0.len() != frame.num_subbands() {
        return Err(Error::DimensionMismatch {
            context: "error vector",
            expected: frame.num_subbands(),
            actual: errors.0.len(),
        });
    }
    let mut psi = weights.to_vec();
    forward_into(&mut psi, gains, step_size, regularization, frame, &errors.0);
    check_finite(&psi, frame.iteration)?;
    Ok(psi)
}

fn forward_into(
    psi: &mut [f64],
    gains: &[f64],
    step_size: f64,
    regularization: f64,
    frame: &SubbandFrame,
    errors: &[f64],
) {
    for (u, e) in frame.regressors().zip(errors) {
        let norm: f64 = u.iter().zip(gains).map(|(x, g)| g * x * x).sum();
        let scale = step_size * e / (norm + regularization);
        for ((p, g), x) in psi.iter_mut().zip(gains).zip(u) {
            *p += scale * g * x;
        }
    }
}

/// Running estimate of w°: reset to ψ every `period` iterations, otherwise
/// averaged half-and-half with ψ.
pub fn track_estimate(w_hat: &mut [f64], psi: &[f64], iteration: usize, period: usize) {
    if iteration % period.max(1) == 0 {
        w_hat.copy_from_slice(psi);
    } else {
        for (h, p) in w_hat.iter_mut().zip(psi) {
            *h = 0.5 * *h + 0.5 * p;
        }
    }
}

/// `β = max(‖ψ‖₁ − ‖ŵ‖₁, τ) / ‖sgn ψ‖²`, where `‖sgn ψ‖²` counts the nonzero
/// entries of ψ. Returns 0 when ψ is all zeros.
pub fn auto_threshold(psi: &[f64], w_hat: &[f64], tau: f64) -> f64 {
    let active = psi.iter().filter(|p| sign(**p) != 0.0).count();
    if active == 0 {
        return 0.0;
    }
    let l1_psi: f64 = psi.iter().map(|p| p.abs()).sum();
    let l1_hat: f64 = w_hat.iter().map(|h| h.abs()).sum();
    (l1_psi - l1_hat).max(tau) / active as f64
}

/// Period of the ŵ reset, `M/N` rounded to the nearest positive integer.
pub fn estimate_reset_period(filter_length: usize, num_subbands: usize) -> usize {
    ((filter_length as f64 / num_subbands as f64).round() as usize).max(1)
}

/// `e(n) = d(n) − uᵀ(n) w(n)` for the delayless fullband error path.
pub fn delayless_error(weights: &[f64], regressor: &[f64], desired: f64) -> Result<f64> {
    if weights.len() != regressor.len() {
        return Err(Error::DimensionMismatch {
            context: "fullband regressor",
            expected: weights.len(),
            actual: regressor.len(),
        });
    }
    Ok(desired - dot(weights, regressor))
}

/// Adaptive filter state for the PFBS-PNSAF family.
#[derive(Debug, Clone)]
pub struct FilterState {
    params: FilterParams,
    weights: Vec<f64>,
    intermediate: Vec<f64>,
    gains: Vec<f64>,
    w_hat: Vec<f64>,
    threshold: f64,
    iteration: usize,
    reset_period: usize,
    errors: Vec<f64>,
    scratch: Vec<f64>,
}

impl FilterState {
    /// Zero-initialised filter of length `filter_length` for `num_subbands` bands.
    pub fn new(filter_length: usize, num_subbands: usize, params: FilterParams) -> Result<Self> {
        if filter_length == 0 {
            return Err(Error::invalid("filter_length", "must be positive"));
        }
        if num_subbands == 0 {
            return Err(Error::invalid("num_subbands", "must be positive"));
        }
        params.validate()?;
        let threshold = match params.threshold {
            ThresholdMode::Fixed { beta } => beta,
            ThresholdMode::Auto { .. } => 0.0,
        };
        let mut state = Self {
            params,
            weights: vec![0.0; filter_length],
            intermediate: vec![0.0; filter_length],
            gains: vec![0.0; filter_length],
            w_hat: vec![0.0; filter_length],
            threshold,
            iteration: 0,
            reset_period: estimate_reset_period(filter_length, num_subbands),
            errors: vec![0.0; num_subbands],
            scratch: vec![0.0; filter_length],
        };
        state
            .params
            .rule
            .compute_into(&state.weights, &mut state.gains);
        Ok(state)
    }

    /// Replaces the weights, e.g. to start from a known system.
    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "initial weights",
                expected: self.weights.len(),
                actual: weights.len(),
            });
        }
        self.weights.copy_from_slice(weights);
        self.params
            .rule
            .compute_into(&self.weights, &mut self.gains);
        Ok(self)
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ψ(k) from the most recent forward step.
    pub fn intermediate(&self) -> &[f64] {
        &self.intermediate
    }

    /// Diagonal of G used in the most recent update.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    /// β used by the most recent proximal step (threshold level `μβ` for fixed β, `β` for auto).
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn filter_length(&self) -> usize {
        self.weights.len()
    }

    pub fn subband_errors(&self, frame: &SubbandFrame) -> Result<ErrorVector> {
        subband_errors(&self.weights, frame)
    }

    /// One full iteration: gains, subband errors, forward step, β update,
    /// proximal step. Nothing is committed if the forward step diverges.
    pub fn iterate(&mut self, frame: &SubbandFrame) -> Result<()> {
        check_frame(self.weights.len(), frame)?;
        if frame.num_subbands() != self.errors.len() {
            return Err(Error::DimensionMismatch {
                context: "frame subbands",
                expected: self.errors.len(),
                actual: frame.num_subbands(),
            });
        }
        let FilterParams {
            step_size,
            regularization,
            rule,
            threshold,
        } = self.params;

        rule.compute_into(&self.weights, &mut self.scratch);
        for ((e, u), d) in self
            .errors
            .iter_mut()
            .zip(frame.regressors())
            .zip(frame.desired())
        {
            *e = d - dot(u, &self.weights);
        }

        let mut psi = self.weights.clone();
        forward_into(
            &mut psi,
            &self.scratch,
            step_size,
            regularization,
            frame,
            &self.errors,
        );
        check_finite(&psi, self.iteration)?;

        let (beta, level) = match threshold {
            ThresholdMode::Fixed { beta } => (beta, step_size * beta),
            ThresholdMode::Auto { tau } => {
                track_estimate(&mut self.w_hat, &psi, self.iteration, self.reset_period);
                let beta = auto_threshold(&psi, &self.w_hat, tau);
                (beta, beta)
            }
        };

        std::mem::swap(&mut self.gains, &mut self.scratch);
        self.intermediate.copy_from_slice(&psi);
        soft_threshold_in_place(&mut psi, level);
        self.weights = psi;
        self.threshold = beta;
        self.iteration += 1;
        Ok(())
    }
}

fn check_frame(filter_length: usize, frame: &SubbandFrame) -> Result<()> {
    if frame.filter_length() != filter_length {
        return Err(Error::DimensionMismatch {
            context: "regressor length",
            expected: filter_length,
            actual: frame.filter_length(),
        });
    }
    Ok(())
}

fn check_finite(values: &[f64], iteration: usize) -> Result<()> {
    if let Some(m) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            iteration,
            detail: format!("forward step produced {} at tap {m}", values[m]),
        });
    }
    Ok(())
}
