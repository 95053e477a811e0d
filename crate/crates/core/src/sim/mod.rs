//! Seeded Monte-Carlo experiments: root-node selection bias and prediction
//! error of fitted trees on known mean functions.
//!
//! Each trial draws from its own ChaCha stream selected by the trial index,
//! so results do not depend on how trials are scheduled across threads.

mod bias;
mod concrete;
mod mse;
mod scenario;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bias::{bias_experiment, root_choice, BiasOptions, BiasReport};
pub use concrete::{synthetic_concrete, CONCRETE_PREDICTORS, CONCRETE_RESPONSES, CONCRETE_UNIQUE_COUNTS};
pub use mse::{mse_experiment, MethodSummary, MseMethod, MseOptions, MseReport, TestDesign};
pub use scenario::{gen_scenario, Generated, ScenarioKind, ScenarioSpec, CORRELATION, LONG_TIMES, NOISE_SD};

/// Generator for trial `trial` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
