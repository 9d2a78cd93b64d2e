//! Seeded Born-rule sampling, random states and end-to-end protocol runs.

mod monte_carlo;
mod protocol;
mod sampling;
mod states;

pub use monte_carlo::{monte_carlo, trial_seed, MonteCarloResult};
pub use protocol::{run_protocol, split_evenly, AdaptiveDecision, ProtocolKind, ProtocolRunner, TrialConfig, TrialResult, MIN_COPIES};
pub use sampling::sample_counts;
pub use states::{haar_unitary, random_mes, random_pure_state, singlet, state_rng, werner_purity, werner_state};

/// Generator used for every simulated run. ChaCha8 seeded through
/// `seed_from_u64`, so distinct 64-bit seeds give independent streams.
pub type SimRng = rand_chacha::ChaCha8Rng;
