//! Proximal policy optimization over vectorized drawer environments.

mod advantage;
mod config;
mod train;

pub use advantage::*;
pub use config::{PpoConfig, TrainScenarios, PPO_KEYS};
pub use train::*;
