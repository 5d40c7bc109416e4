use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::analysis::{AnalysisBank, SubbandAnalyzer};
use crate::error::{Error, Result};

/// Second-order statistics of the decimated subband regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandStatistics {
    /// `R_i = E{u_i(k) u_iᵀ(k)}`, one `M×M` matrix per band.
    pub correlations: Vec<DMatrix<f64>>,
    /// `σ²_{u,i} = R_i[0,0]`.
    pub input_variances: Vec<f64>,
    /// `‖h_i‖²`, carried along so noise variances can be derived later.
    pub filter_energies: Vec<f64>,
}

impl SubbandStatistics {
    pub fn num_subbands(&self) -> usize {
        self.correlations.len()
    }

    pub fn filter_length(&self) -> usize {
        self.correlations.first().map_or(0, |r| r.nrows())
    }

    /// Statistics for `N` white bands with `R_i = σ_i² I`.
    pub fn white(variances: &[f64], filter_energies: &[f64], filter_length: usize) -> Self {
        assert_eq!(variances.len(), filter_energies.len());
        Self {
            correlations: variances
                .iter()
                .map(|v| DMatrix::identity(filter_length, filter_length) * *v)
                .collect(),
            input_variances: variances.to_vec(),
            filter_energies: filter_energies.to_vec(),
        }
    }

    /// `σ²_{v,i} = ‖h_i‖² σ_v²`.
    pub fn noise_variances(&self, fullband_noise_variance: f64) -> Vec<f64> {
        self.filter_energies
            .iter()
            .map(|e| e * fullband_noise_variance)
            .collect()
    }
}

/// Estimates `R_i` and `σ²_{u,i}` by averaging `u_i(k)u_iᵀ(k)` over `num_frames`
/// frames of `input` pushed through the bank.
///
/// The first frames, until every delay line has been filled, are discarded.
pub fn estimate_subband_statistics(
    bank: &Arc<AnalysisBank>,
    mut input: impl FnMut() -> f64,
    filter_length: usize,
    num_frames: usize,
) -> Result<SubbandStatistics> {
    if num_frames == 0 {
        return Err(Error::invalid("num_frames", "must be positive"));
    }
    if num_frames < 10 * filter_length {
        log::warn!(
            "estimating {filter_length}x{filter_length} subband correlations from only {num_frames} frames (< 10·M)"
        );
    }
    let n = bank.num_subbands();
    let warmup = (filter_length + bank.filter_length()).div_ceil(n);
    let mut analyzer = SubbandAnalyzer::new(bank.clone(), filter_length);
    let mut acc = vec![DMatrix::<f64>::zeros(filter_length, filter_length); n];
    let mut samples = vec![0.0; n];
    let mut u = DVector::<f64>::zeros(filter_length);

    for k in 0..warmup + num_frames {
        samples.iter_mut().for_each(|s| *s = input());
        let frame = analyzer.advance_frame(&samples, &samples)?;
        if k < warmup {
            continue;
        }
        for (r, reg) in acc.iter_mut().zip(frame.regressors()) {
            u.copy_from_slice(reg);
            // Lower triangle only; mirrored below.
            r.syger(1.0, &u, &u, 1.0);
        }
    }

    let scale = 1.0 / num_frames as f64;
    for r in acc.iter_mut() {
        *r *= scale;
        r.fill_upper_triangle_with_lower_triangle();
    }
    if acc.iter().all(|r| r[(0, 0)] == 0.0) {
        return Err(Error::Degenerate(
            "subband input has zero variance in every band".into(),
        ));
    }
    let input_variances = acc.iter().map(|r| r[(0, 0)]).collect();
    Ok(SubbandStatistics {
        correlations: acc,
        input_variances,
        filter_energies: bank.energies(),
    })
}
