use nalgebra::{DMatrix, DVector};

use super::moments::{expected_abs, expected_p, expected_p2, expected_xp, GaussianMomentInput};
use crate::adaptive::{FilterParams, ProportionateRule, ThresholdMode};
use crate::error::{Error, Result};
use crate::filterbank::SubbandStatistics;

/// Parameters of the modelled algorithm.
///
/// `regularization` is the δ appearing next to `u_iᵀGu_i`, i.e. the value
/// stored in [`FilterParams::regularization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub step_size: f64,
    pub beta: f64,
    pub regularization: f64,
    pub rule: ProportionateRule,
}

impl TheoryParams {
    /// Fixed-β parameters of an adaptive filter. Auto-β and the PNLMS rule have
    /// no model and are rejected.
    pub fn from_filter(params: &FilterParams) -> Result<Self> {
        params.validate()?;
        let beta = match params.threshold {
            ThresholdMode::Fixed { beta } => beta,
            ThresholdMode::Auto { .. } => {
                return Err(Error::invalid(
                    "threshold",
                    "the transient model covers fixed beta only",
                ))
            }
        };
        let out = Self {
            step_size: params.step_size,
            beta,
            regularization: params.regularization,
            rule: params.rule,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(
                "step_size",
                format!("must be positive, got {}", self.step_size),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(
                "beta",
                format!("must be non-negative, got {}", self.beta),
            ));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::invalid(
                "regularization",
                format!("must be non-negative, got {}", self.regularization),
            ));
        }
        if let ProportionateRule::Pnlms { .. } = self.rule {
            return Err(Error::invalid(
                "rule",
                "the transient model covers the identity and simplified rules only",
            ));
        }
        self.rule.validate().map_err(|r| Error::invalid("rule", r))
    }
}

/// First and second moments of the weight error `w̃(k) = w° − w(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryState {
    pub iteration: usize,
    /// `E{w̃(k)}`.
    pub mean_w_err: DVector<f64>,
    /// `E{w̃(k)w̃ᵀ(k)}`.
    pub cov_w_err: DMatrix<f64>,
    /// `E{ψ̃(k)}` from the step that produced this state (equals `mean_w_err` initially).
    pub mean_psi_err: DVector<f64>,
    /// `E{ψ̃(k)ψ̃ᵀ(k)}` from the step that produced this state.
    pub cov_psi_err: DMatrix<f64>,
    /// `ḡ(k−1)` used by the step that produced this state.
    pub gains_mean: DVector<f64>,
    /// Largest `|W − Wᵀ|` entry observed before symmetrisation.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdEmse {
    pub msd: f64,
    pub emse: f64,
}

/// Mean and mean-square transient model of PNSAF / PFBS-PNSAF.
#[derive(Debug, Clone)]
pub struct TheoryModel {
    stats: SubbandStatistics,
    noise_variances: Vec<f64>,
    true_system: DVector<f64>,
    params: TheoryParams,
    /// `1 / (σ²_{u,i} + δ)`.
    band_weights: Vec<f64>,
    /// `Σ_i R_i / (σ²_{u,i} + δ)`.
    weighted_sum: DMatrix<f64>,
}

impl TheoryModel {
    pub fn new(
        stats: SubbandStatistics,
        noise_variances: Vec<f64>,
        true_system: &[f64],
        params: TheoryParams,
    ) -> Result<Self> {
        params.validate()?;
        let m = true_system.len();
        if stats.filter_length() != m {
            return Err(Error::DimensionMismatch {
                context: "theory statistics",
                expected: m,
                actual: stats.filter_length(),
            });
        }
        if noise_variances.len() != stats.num_subbands() {
            return Err(Error::DimensionMismatch {
                context: "subband noise variances",
                expected: stats.num_subbands(),
                actual: noise_variances.len(),
            });
        }
        let band_weights: Vec<f64> = stats
            .input_variances
            .iter()
            .map(|v| 1.0 / (v + params.regularization))
            .collect();
        if band_weights.iter().any(|c| !c.is_finite()) {
            return Err(Error::Degenerate(
                "zero subband variance with zero regularization".into(),
            ));
        }
        let mut weighted_sum = DMatrix::zeros(m, m);
        for (r, c) in stats.correlations.iter().zip(&band_weights) {
            weighted_sum += r * *c;
        }
        Ok(Self {
            stats,
            noise_variances,
            true_system: DVector::from_column_slice(true_system),
            params,
            band_weights,
            weighted_sum,
        })
    }

    pub fn params(&self) -> &TheoryParams {
        &self.params
    }

    pub fn stats(&self) -> &SubbandStatistics {
        &self.stats
    }

    pub fn true_system(&self) -> &DVector<f64> {
        &self.true_system
    }

    /// State at `k = 0` for `w(0) = 0`.
    pub fn initial_state(&self) -> TheoryState {
        let w = &self.true_system;
        let m = w.len();
        TheoryState {
            iteration: 0,
            mean_w_err: w.clone(),
            cov_w_err: w * w.transpose(),
            mean_psi_err: w.clone(),
            cov_psi_err: w * w.transpose(),
            gains_mean: DVector::from_element(m, 1.0 / m as f64),
            asymmetry: 0.0,
        }
    }

    /// `ḡ(k)` with `E{|w_m|}` evaluated for `w_m ~ N(w°_m − z_m, W_mm − z_m²)`.
    pub fn mean_gains(&self, state: &TheoryState) -> DVector<f64> {
        mean_gains(
            &self.true_system,
            &state.mean_w_err,
            &state.cov_w_err,
            self.params.rule,
        )
    }

    pub fn msd_emse(&self, state: &TheoryState) -> MsdEmse {
        msd_emse(&state.cov_w_err, &self.stats)
    }

    /// One iteration of the coupled mean / covariance recursion.
    pub fn step(&self, state: &TheoryState) -> Result<TheoryState> {
        let k = state.iteration;
        let mu = self.params.step_size;
        let m = self.true_system.len();
        let w = &state.cov_w_err;
        let z = &state.mean_w_err;

        let g = self.mean_gains(state);
        check_finite(g.iter(), "mean gains", k)?;

        // E{ψ̃(k+1)} = (I − μḠA) E{w̃(k)}
        let az = &self.weighted_sum * z;
        let z_psi = z - (g.component_mul(&az)) * mu;

        // Ξ = W − μḠAW − μWAᵀḠ + μ²ḠSḠ
        let mut gaw = &self.weighted_sum * w;
        scale_rows(&mut gaw, &(&g * mu));
        let mut s = DMatrix::<f64>::zeros(m, m);
        let mut wr = DMatrix::<f64>::zeros(m, m);
        for ((r, c), nv) in self
            .stats
            .correlations
            .iter()
            .zip(&self.band_weights)
            .zip(&self.noise_variances)
        {
            let c2 = c * c;
            wr.gemm(1.0, w, r, 0.0);
            s.gemm(c2, r, &wr, 1.0);
            let trace = w.dot(r);
            s += r * (c2 * (trace + nv));
        }
        scale_rows(&mut s, &g);
        scale_cols(&mut s, &g);
        let xi = w - &gaw - gaw.transpose() + s * (mu * mu);
        check_finite(xi.iter(), "psi-error covariance", k)?;

        let threshold = mu * self.params.beta;
        if threshold == 0.0 {
            return self.finish(k, z_psi.clone(), xi.clone(), z_psi, xi, g);
        }
        let mut p = DVector::<f64>::zeros(m);
        let mut xp = DVector::<f64>::zeros(m);
        let mut pp = DVector::<f64>::zeros(m);
        for i in 0..m {
            let mean = self.true_system[i] - z_psi[i];
            let var = (xi[(i, i)] - z_psi[i] * z_psi[i]).max(0.0);
            let input = GaussianMomentInput::new(mean, var.sqrt(), threshold);
            p[i] = expected_p(input);
            xp[i] = expected_xp(input);
            pp[i] = expected_p2(input);
        }
        check_finite(
            p.iter().chain(xp.iter()).chain(pp.iter()),
            "proximal moments",
            k,
        )?;

        // Ψ_{ml} = E{ψ̃_m P_l}, Θ_{ml} = E{P_m P_l}
        let mut psi = &z_psi * p.transpose();
        let mut theta = &p * p.transpose();
        for i in 0..m {
            psi[(i, i)] = self.true_system[i] * p[i] - xp[i];
            theta[(i, i)] = pp[i];
        }
        let next = &xi + &psi + psi.transpose() + theta;
        let next_mean = &z_psi + &p;
        self.finish(k, next_mean, next, z_psi, xi, g)
    }

    fn finish(
        &self,
        k: usize,
        mean: DVector<f64>,
        mut cov: DMatrix<f64>,
        mean_psi: DVector<f64>,
        mut cov_psi: DMatrix<f64>,
        gains: DVector<f64>,
    ) -> Result<TheoryState> {
        let asym = symmetrize(&mut cov);
        symmetrize(&mut cov_psi);
        check_finite(cov.iter().chain(mean.iter()), "weight-error covariance", k)?;
        Ok(TheoryState {
            iteration: k + 1,
            mean_w_err: mean,
            cov_w_err: cov,
            mean_psi_err: mean_psi,
            cov_psi_err: cov_psi,
            gains_mean: gains,
            asymmetry: asym,
        })
    }

    /// MSD and EMSE for `k = 0, …, iterations − 1`.
    pub fn run(&self, iterations: usize) -> Result<Vec<MsdEmse>> {
        let mut out = Vec::with_capacity(iterations);
        let mut state = self.initial_state();
        for k in 0..iterations {
            out.push(self.msd_emse(&state));
            if k + 1 < iterations {
                state = self.step(&state)?;
            }
        }
        Ok(out)
    }
}

/// Mean gains for the identity and simplified rules.
///
/// The PNLMS rule has no closed form here and falls back to uniform gains.
pub fn mean_gains(
    true_system: &DVector<f64>,
    mean_w_err: &DVector<f64>,
    cov_w_err: &DMatrix<f64>,
    rule: ProportionateRule,
) -> DVector<f64> {
    let m = true_system.len();
    match rule {
        ProportionateRule::Simplified { zeta, epsilon } => {
            let abs: Vec<f64> = (0..m)
                .map(|i| {
                    let z = mean_w_err[i];
                    let var = (cov_w_err[(i, i)] - z * z).max(0.0);
                    expected_abs(GaussianMomentInput::new(
                        true_system[i] - z,
                        var.sqrt(),
                        0.0,
                    ))
                })
                .collect();
            let l1: f64 = abs.iter().sum();
            let floor = (1.0 - zeta) / (2.0 * m as f64);
            let scale = (1.0 + zeta) / (2.0 * l1 + epsilon);
            DVector::from_iterator(m, abs.iter().map(|a| floor + scale * a))
        }
        ProportionateRule::Identity | ProportionateRule::Pnlms { .. } => {
            DVector::from_element(m, 1.0 / m as f64)
        }
    }
}

/// `MSD = Tr(W)`, `EMSE = (1/N) Σ_i Tr(W R_i)`.
pub fn msd_emse(cov_w_err: &DMatrix<f64>, stats: &SubbandStatistics) -> MsdEmse {
    let n = stats.num_subbands().max(1) as f64;
    MsdEmse {
        msd: cov_w_err.trace(),
        emse: stats
            .correlations
            .iter()
            .map(|r| cov_w_err.dot(r))
            .sum::<f64>()
            / n,
    }
}

fn scale_rows(a: &mut DMatrix<f64>, g: &DVector<f64>) {
    for (mut row, gi) in a.row_iter_mut().zip(g.iter()) {
        row *= *gi;
    }
}

fn scale_cols(a: &mut DMatrix<f64>, g: &DVector<f64>) {
    for (mut col, gi) in a.column_iter_mut().zip(g.iter()) {
        col *= *gi;
    }
}

/// Replaces `a` by `(a + aᵀ)/2` and returns the largest asymmetry removed.
fn symmetrize(a: &mut DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            worst = worst.max((x - y).abs());
            let avg = 0.5 * (x + y);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    worst
}

fn check_finite<'a>(
    values: impl IntoIterator<Item = &'a f64>,
    term: &'static str,
    iteration: usize,
) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteTheory { term, iteration })
    }
}
