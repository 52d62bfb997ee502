//! Reward terms for the drawer task and their weighted combination.

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub w_dist: f64,
    pub w_rot: f64,
    pub w_handle: f64,
    pub w_open: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_dist: 2.0,
            w_rot: 0.5,
            w_handle: 1.0,
            w_open: 7.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_dist", self.w_dist),
            ("w_rot", self.w_rot),
            ("w_handle", self.w_handle),
            ("w_open", self.w_open),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!(
                    "{} must be finite and non-negative, got {}",
                    name, w
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub r_dist: f64,
    pub r_rot: f64,
    pub r_handle: f64,
    pub r_open: f64,
    pub total: f64,
    /// Gripper-to-handle distance in meters.
    pub d: f64,
    pub dot1: f64,
    pub dot2: f64,
}

/// `(d, 1 / (1 + d^2))` for the gripper and handle positions.
pub fn distance_reward(gripper: &Vector3<f64>, handle: &Vector3<f64>) -> (f64, f64) {
    let d = (gripper - handle).norm();
    (d, 1.0 / (1.0 + d * d))
}

fn unit(v: &Vector3<f64>, name: &str) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::config(format!(
            "{} axis has zero or non-finite norm",
            name
        )));
    }
    Ok(v / n)
}

/// Orientation reward from the forward/inward and up/up axis pairs:
/// `0.5 * (sign(dot1) dot1^2 + sign(dot2) dot2^2)`.
pub fn rotation_reward(
    gripper_forward: &Vector3<f64>,
    drawer_inward: &Vector3<f64>,
    gripper_up: &Vector3<f64>,
    drawer_up: &Vector3<f64>,
) -> Result<(f64, f64, f64)> {
    let dot1 =
        unit(gripper_forward, "gripper forward")?.dot(&unit(drawer_inward, "drawer inward")?);
    let dot2 = unit(gripper_up, "gripper up")?.dot(&unit(drawer_up, "drawer up")?);
    Ok((dot1, dot2, rotation_reward_from_dots(dot1, dot2)))
}

pub fn rotation_reward_from_dots(dot1: f64, dot2: f64) -> f64 {
    0.5 * (dot1.signum() * dot1 * dot1 + dot2.signum() * dot2 * dot2)
}

/// Bonus of 0.5 when the left finger is strictly above the handle and the
/// right finger strictly below it.
pub fn around_handle_reward(left_finger_z: f64, right_finger_z: f64, handle_z: f64) -> f64 {
    if left_finger_z > handle_z && right_finger_z < handle_z {
        0.5
    } else {
        0.0
    }
}

pub fn open_reward(drawer_pos: f64, r_handle: f64) -> f64 {
    drawer_pos * r_handle + drawer_pos
}

pub fn total_reward(b: &RewardBreakdown, w: &RewardWeights) -> f64 {
    w.w_dist * b.r_dist + w.w_rot * b.r_rot + w.w_handle * b.r_handle + w.w_open * b.r_open
}
