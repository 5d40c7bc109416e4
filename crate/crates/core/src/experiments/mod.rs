//! Channels, excitation signals, Monte-Carlo runner and performance metrics.

mod channel;
mod metrics;
mod runner;
mod signals;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use channel::{count_nonzero, ChangeSchedule, ChannelModel, SpreadReading, NONZERO_TOLERANCE};
pub use metrics::{
    erle_series, iterations_to_threshold, max_deviation, recovery_index, steady_state_mean, to_db,
    Better, ErleSeries, MetricSeries, DB_FLOOR, ERLE_CEILING_DB,
};
pub use runner::{
    monte_carlo, run_trial, Execution, ExperimentConfig, MonteCarloResult, SteadyStateStats,
    TrialOutput,
};
pub use signals::{
    gen_ar1, load_wav, noise_variance_for_snr, write_wav, InputSource, WavSignal, AR1_WARMUP,
};

/// Independent random stream `stream` under `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
