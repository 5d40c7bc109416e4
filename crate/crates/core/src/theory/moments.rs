//! Moments of `|x|` and of the clipping function `P_t(x)` for Gaussian `x`.

use std::f64::consts::{PI, SQRT_2};

use libm::erf;

use crate::adaptive::clip_residual;

/// Below this standard deviation the deterministic limits are returned.
pub const MIN_STD: f64 = 1e-12;

/// `x ~ N(mean, std²)` together with the clipping threshold `t = μβ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMomentInput {
    pub mean: f64,
    pub std: f64,
    pub threshold: f64,
}

impl GaussianMomentInput {
    pub fn new(mean: f64, std: f64, threshold: f64) -> Self {
        debug_assert!(std >= 0.0 && threshold >= 0.0);
        Self {
            mean,
            std,
            threshold,
        }
    }

    fn degenerate(&self) -> bool {
        self.std < MIN_STD
    }

    fn arguments(&self) -> (f64, f64) {
        let s = SQRT_2 * self.std;
        (
            (self.threshold + self.mean) / s,
            (self.threshold - self.mean) / s,
        )
    }
}

/// `E{|x|} = √(2/π)σ·exp(−x̄²/2σ²) + x̄·erf(x̄/√2σ)`.
pub fn expected_abs(input: GaussianMomentInput) -> f64 {
    let GaussianMomentInput { mean, std, .. } = input;
    if input.degenerate() {
        return mean.abs();
    }
    (2.0 / PI).sqrt() * std * (-mean * mean / (2.0 * std * std)).exp()
        + mean * erf(mean / (SQRT_2 * std))
}

/// `E{P_t(x)}`.
pub fn expected_p(input: GaussianMomentInput) -> f64 {
    let GaussianMomentInput {
        mean,
        std,
        threshold: t,
    } = input;
    if t == 0.0 {
        return 0.0;
    }
    if input.degenerate() {
        return clip_residual(mean, t);
    }
    let (a1, a2) = input.arguments();
    0.5 * (2.0 / PI).sqrt() * std * ((-a1 * a1).exp() - (-a2 * a2).exp())
        + 0.5 * (mean + t) * erf(a1)
        + 0.5 * (mean - t) * erf(a2)
}

/// `E{x·P_t(x)}`.
pub fn expected_xp(input: GaussianMomentInput) -> f64 {
    let GaussianMomentInput {
        mean,
        std,
        threshold: t,
    } = input;
    if t == 0.0 {
        return 0.0;
    }
    if input.degenerate() {
        return mean * clip_residual(mean, t);
    }
    let (a1, a2) = input.arguments();
    let c = (2.0 / PI).sqrt() * std;
    let v = std * std;
    let sqrt_pi = PI.sqrt();
    (0.5 * t * c + c * mean - v / sqrt_pi * a1) * (-a1 * a1).exp()
        + (0.5 * t * c - c * mean - v / sqrt_pi * a2) * (-a2 * a2).exp()
        + 0.5 * (v + mean * mean + t * mean) * erf(a1)
        + 0.5 * (v + mean * mean - t * mean) * erf(a2)
}

/// `E{P_t²(x)}`.
pub fn expected_p2(input: GaussianMomentInput) -> f64 {
    let GaussianMomentInput {
        mean,
        std,
        threshold: t,
    } = input;
    if t == 0.0 {
        return 0.0;
    }
    if input.degenerate() {
        return clip_residual(mean, t).powi(2);
    }
    let (a1, a2) = input.arguments();
    let c = (2.0 / PI).sqrt() * std;
    let v = std * std;
    let sqrt_pi = PI.sqrt();
    (c * mean - v / sqrt_pi * a1) * (-a1 * a1).exp()
        - (c * mean + v / sqrt_pi * a2) * (-a2 * a2).exp()
        + 0.5 * (v + mean * mean - t * t) * (erf(a1) + erf(a2))
        + t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: f64, std: f64, t: f64) -> GaussianMomentInput {
        GaussianMomentInput::new(mean, std, t)
    }

    #[test]
    fn abs_limits() {
        assert!((expected_abs(g(0.0, 1.0, 0.0)) - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((expected_abs(g(5.0, 0.1, 0.0)) - 5.0).abs() < 1e-6);
        assert_eq!(expected_abs(g(-0.3, 0.0, 0.0)), 0.3);
    }

    #[test]
    fn p_limits() {
        for std in [0.01, 0.3, 2.0] {
            assert!(expected_p(g(0.0, std, 0.4)).abs() < 1e-15);
        }
        assert!((expected_p(g(0.3, 0.01, 1.0)) - 0.3).abs() < 1e-9);
        assert_eq!(expected_p(g(0.3, 0.5, 0.0)), 0.0);
    }

    #[test]
    fn xp_limits() {
        let (m, s) = (0.2, 0.05);
        let t = m + 10.0 * s;
        assert!((expected_xp(g(m, s, t)) - (s * s + m * m)).abs() < 1e-6);
        // x̄ = 0, t → 0⁺: E{xP} ≈ t·E{|x|} = t·σ√(2/π).
        let t = 1e-7;
        let expected = t * 0.4 * (2.0 / PI).sqrt();
        assert!((expected_xp(g(0.0, 0.4, t)) - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn p2_limits() {
        let (m, s) = (-0.1, 0.2);
        assert!((expected_p2(g(m, s, 0.1f64.abs() + 10.0 * s)) - (s * s + m * m)).abs() < 1e-6);
        // Relative gap to t² shrinks linearly with t (mass inside [−t, t]).
        let t = 1e-3;
        assert!((expected_p2(g(0.15, 0.3, t)) - t * t).abs() < 1e-2 * t * t);
    }

    #[test]
    fn degenerate_limits_match_clip() {
        assert_eq!(expected_p(g(0.5, 0.0, 0.2)), 0.2);
        assert_eq!(expected_xp(g(-0.5, 0.0, 0.2)), 0.1);
        assert!((expected_p2(g(0.1, 0.0, 0.2)) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn p2_bounded_by_threshold_squared() {
        for &(m, s, t) in &[
            (0.2, 0.5, 0.3),
            (-1.0, 0.1, 0.05),
            (0.0, 3.0, 2.0),
            (4.0, 1.0, 0.5),
        ] {
            let p2 = expected_p2(g(m, s, t));
            assert!(p2 >= -1e-15 && p2 <= t * t + 1e-15, "({m},{s},{t}) -> {p2}");
        }
    }
}
