use serde::{Deserialize, Serialize};

/// How the diagonal proportionate matrix `G(k)` is computed from `w(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ProportionateRule {
    /// `G = I/M`; reduces the update to NSAF.
    Identity,
    /// `g_m = (1−ζ)/(2M) + (1+ζ)|w_m| / (2Σ|w| + ε)`.
    Simplified { zeta: f64, epsilon: f64 },
    /// `q_m = max(ρ·max(γ, max|w|), |w_m|)`, `g_m = q_m / Σq`.
    Pnlms { rho: f64, gamma: f64 },
}

impl ProportionateRule {
    pub const DEFAULT_EPSILON: f64 = 1e-4;
    pub const DEFAULT_RHO: f64 = 0.04;
    pub const DEFAULT_GAMMA: f64 = 0.01;

    pub fn simplified(zeta: f64) -> Self {
        ProportionateRule::Simplified {
            zeta,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn pnlms() -> Self {
        ProportionateRule::Pnlms {
            rho: Self::DEFAULT_RHO,
            gamma: Self::DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ProportionateRule::Identity => Ok(()),
            ProportionateRule::Simplified { zeta, epsilon } => {
                if !(-1.0..1.0).contains(&zeta) {
                    return Err(format!("zeta must lie in [-1, 1), got {zeta}"));
                }
                if !(epsilon > 0.0) {
                    return Err(format!("epsilon must be positive, got {epsilon}"));
                }
                Ok(())
            }
            ProportionateRule::Pnlms { rho, gamma } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(format!("rho must lie in (0, 1), got {rho}"));
                }
                if !(gamma > 0.0) {
                    return Err(format!("gamma must be positive, got {gamma}"));
                }
                Ok(())
            }
        }
    }

    /// Writes the gains for `weights` into `out`.
    pub fn compute_into(&self, weights: &[f64], out: &mut [f64]) {
        match *self {
            ProportionateRule::Identity => out.fill(1.0 / weights.len() as f64),
            ProportionateRule::Simplified { zeta, epsilon } => {
                gains_simplified_into(weights, zeta, epsilon, out)
            }
            ProportionateRule::Pnlms { rho, gamma } => gains_pnlms_into(weights, rho, gamma, out),
        }
    }

    pub fn compute(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; weights.len()];
        self.compute_into(weights, &mut out);
        out
    }
}

/// Low-cost proportionate rule, `Σg = (1−ζ)/2 + (1+ζ)Σ|w| / (2Σ|w|+ε)`.
pub fn gains_simplified(weights: &[f64], zeta: f64, epsilon: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    gains_simplified_into(weights, zeta, epsilon, &mut out);
    out
}

fn gains_simplified_into(weights: &[f64], zeta: f64, epsilon: f64, out: &mut [f64]) {
    let m = weights.len() as f64;
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let floor = (1.0 - zeta) / (2.0 * m);
    let scale = (1.0 + zeta) / (2.0 * l1 + epsilon);
    for (g, w) in out.iter_mut().zip(weights) {
        *g = floor + scale * w.abs();
    }
}

/// PNLMS-style rule; the gains always sum to one.
pub fn gains_pnlms(weights: &[f64], rho: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    gains_pnlms_into(weights, rho, gamma, &mut out);
    out
}

fn gains_pnlms_into(weights: &[f64], rho: f64, gamma: f64, out: &mut [f64]) {
    let peak = weights.iter().fold(0.0_f64, |acc, w| acc.max(w.abs()));
    let floor = rho * gamma.max(peak);
    for (q, w) in out.iter_mut().zip(weights) {
        *q = floor.max(w.abs());
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|q| *q /= total);
}
