/// `sgn(x)` with `sgn(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Soft-thresholding: the proximal operator of `threshold·‖·‖₁`.
///
/// Every component with `|ψ_m| ≤ threshold` maps to exactly zero; the rest
/// shrink toward zero by `threshold`.
pub fn soft_threshold(psi: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = psi.to_vec();
    soft_threshold_in_place(&mut out, threshold);
    out
}

pub fn soft_threshold_in_place(values: &mut [f64], threshold: f64) {
    if threshold == 0.0 {
        return;
    }
    for v in values.iter_mut() {
        *v = (v.abs() - threshold).max(0.0) * sign(*v);
    }
}

/// Clipping function `P_t(x)`: `x` inside `[−t, t]`, `t·sgn(x)` outside.
///
/// Soft-thresholding is `x − P_t(x)`.
#[inline]
pub fn clip_residual(x: f64, threshold: f64) -> f64 {
    if x.abs() > threshold {
        threshold * sign(x)
    } else {
        x
    }
}
