//! Kinematic drawer-opening task: a 7-DOF arm with two prismatic fingers
//! and a single prismatic drawer.

mod config;
pub mod reward;
mod sim;

pub use config::{EnvConfig, ENV_KEYS};
pub use reward::{
    around_handle_reward, distance_reward, open_reward, rotation_reward, rotation_reward_from_dots,
    total_reward, RewardBreakdown, RewardWeights,
};
pub use sim::*;
