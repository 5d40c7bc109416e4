//! Statistical model of the subband algorithms: Gaussian moment closed forms,
//! the coupled mean / covariance transient recursion, steady-state MSD and
//! step-size bounds.

mod moments;
mod steady;
mod transient;

pub use moments::{
    expected_abs, expected_p, expected_p2, expected_xp, GaussianMomentInput, MIN_STD,
};
pub use steady::{
    delta_estimate, stability_bounds, stability_factor, steady_state_msd, StabilityBounds,
    SteadyStateInfo,
};
pub use transient::{mean_gains, msd_emse, MsdEmse, TheoryModel, TheoryParams, TheoryState};
