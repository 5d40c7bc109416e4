use nalgebra::DMatrix;

use super::transient::MsdEmse;
use crate::error::{Error, Result};
use crate::filterbank::SubbandStatistics;

/// `y = Σ_i [2μ(σ²_i+δ) − μ²σ²_i] σ²_i / (σ²_i+δ)²`.
pub fn stability_factor(input_variances: &[f64], step_size: f64, regularization: f64) -> f64 {
    input_variances
        .iter()
        .map(|&v| {
            let d = v + regularization;
            (2.0 * step_size * d - step_size * step_size * v) * v / (d * d)
        })
        .sum()
}

/// Steady-state MSD and EMSE,
/// `MSD(∞) = [μ² Σ_i σ²_i σ²_{v,i} / (σ²_i+δ)² + Δ] / y`.
///
/// `noise_variances` are the subband noise powers `‖h_i‖²σ_v²`.
pub fn steady_state_msd(
    stats: &SubbandStatistics,
    noise_variances: &[f64],
    step_size: f64,
    regularization: f64,
    delta: f64,
) -> Result<MsdEmse> {
    if noise_variances.len() != stats.num_subbands() {
        return Err(Error::DimensionMismatch {
            context: "subband noise variances",
            expected: stats.num_subbands(),
            actual: noise_variances.len(),
        });
    }
    let variances = &stats.input_variances;
    let y = stability_factor(variances, step_size, regularization);
    if !(y > 0.0) {
        return Err(Error::Unstable { y });
    }
    let noise_term: f64 = variances
        .iter()
        .zip(noise_variances)
        .map(|(&v, &nv)| v * nv / (v + regularization).powi(2))
        .sum();
    let msd = (step_size * step_size * noise_term + delta) / y;
    let n = variances.len() as f64;
    let emse = variances.iter().map(|v| msd * v).sum::<f64>() / n;
    Ok(MsdEmse { msd, emse })
}

/// Steady-state quantities the Δ estimate is evaluated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateInfo {
    /// `ḡ_m(∞)`.
    pub gains: Vec<f64>,
    /// `E{w̃_m²(∞)}`.
    pub error_power: Vec<f64>,
    /// Indices where the true system is nonzero.
    pub support: Vec<bool>,
}

impl SteadyStateInfo {
    /// Support taken from `|w°_m| > tol`.
    pub fn new(gains: Vec<f64>, error_power: Vec<f64>, true_system: &[f64], tol: f64) -> Self {
        Self {
            gains,
            error_power,
            support: true_system.iter().map(|w| w.abs() > tol).collect(),
        }
    }
}

/// `Δ ≈ Σ_{NZ} μβ² ḡ_m⁻² (2/N + μ) − Σ_{Z} ḡ_m⁻¹ E{w̃_m²}`.
pub fn delta_estimate(
    info: &SteadyStateInfo,
    step_size: f64,
    beta: f64,
    num_subbands: usize,
) -> f64 {
    let factor = step_size * beta * beta * (2.0 / num_subbands as f64 + step_size);
    info.gains
        .iter()
        .zip(&info.error_power)
        .zip(&info.support)
        .map(|((&g, &e), &nz)| if nz { factor / (g * g) } else { -e / g })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBounds {
    /// Convergence in the mean: `2 / Σ_i λ_max(ḠR_i)/(σ²_i+δ)`.
    pub mu_mean_max: f64,
    /// Mean-square convergence: `2(Σσ²_i+δ)/Σσ²_i`.
    pub mu_ms_max: f64,
    /// Fastest-convergence step size `(Σσ²_i+δ)/Σσ²_i`.
    pub mu_practical: f64,
}

impl StabilityBounds {
    pub fn mu_max(&self) -> f64 {
        self.mu_mean_max.min(self.mu_ms_max)
    }
}

/// Step-size bounds for the mean gains `gains`.
///
/// `λ_max(ḠR_i)` is evaluated as the largest eigenvalue of the symmetric
/// matrix `Ḡ^{1/2} R_i Ḡ^{1/2}`, which shares its spectrum.
pub fn stability_bounds(
    stats: &SubbandStatistics,
    gains: &[f64],
    regularization: f64,
) -> Result<StabilityBounds> {
    let m = stats.filter_length();
    if gains.len() != m {
        return Err(Error::DimensionMismatch {
            context: "mean gains",
            expected: m,
            actual: gains.len(),
        });
    }
    if gains.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::invalid("gains", "must be non-negative"));
    }
    let root: Vec<f64> = gains.iter().map(|g| g.sqrt()).collect();
    let mut denom = 0.0;
    for (r, v) in stats.correlations.iter().zip(&stats.input_variances) {
        let scaled = DMatrix::from_fn(m, m, |i, j| root[i] * r[(i, j)] * root[j]);
        let lmax = scaled
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        denom += lmax / (v + regularization);
    }
    let total: f64 = stats.input_variances.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all subband variances are zero".into()));
    }
    Ok(StabilityBounds {
        mu_mean_max: 2.0 / denom,
        mu_ms_max: 2.0 * (total + regularization) / total,
        mu_practical: (total + regularization) / total,
    })
}
