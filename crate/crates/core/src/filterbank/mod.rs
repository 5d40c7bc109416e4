//! Cosine-modulated analysis filter bank and the subband signal path.
//!
//! Fullband input `u(n)` and desired `d(n)` are split by `N` analysis filters
//! `h_i`. The adaptive update consumes, at each decimated index `k`, the
//! regressors `u_i(k) = [u_i(kN), …, u_i(kN−M+1)]` and `d_{i,D}(k) = d_i(kN)`.

mod analysis;
mod prototype;
mod stats;

pub(crate) use analysis::dot;
pub use analysis::{AnalysisBank, DelayLine, SubbandAnalyzer, SubbandFrame};
pub use prototype::{
    builtin_length, magnitude_response, stopband_attenuation_db, PrototypeFilter, BUILTIN_PAIRINGS,
    TARGET_STOPBAND_DB,
};
pub use stats::{estimate_subband_statistics, SubbandStatistics};
