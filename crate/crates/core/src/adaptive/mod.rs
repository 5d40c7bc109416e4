//! Weight updates for NSAF, PNSAF and PFBS-PNSAF.
//!
//! One iteration computes the proportionate gains from `w(k)`, the decimated
//! subband errors, the forward step `ψ(k+1)`, optionally a new threshold β,
//! and finally `w(k+1) = soft_threshold(ψ(k+1), μβ)`. With β = 0 the last step
//! is the identity (PNSAF); with `G = I/M` as well it is NSAF.

mod filter;
mod gains;
mod prox;

pub use filter::{
    auto_threshold, delayless_error, estimate_reset_period, forward_step, subband_errors,
    track_estimate, ErrorVector, FilterParams, FilterState, ThresholdMode,
};
pub use gains::{gains_pnlms, gains_simplified, ProportionateRule};
pub use prox::{clip_residual, sign, soft_threshold, soft_threshold_in_place};
