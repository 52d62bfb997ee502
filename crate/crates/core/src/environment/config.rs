use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::Vector3;

use super::reward::RewardWeights;
use crate::error::{Error, Result};
use crate::faults::{FaultScenario, CONTROLLED_JOINTS};
use crate::keyvalue::{format_vec3, KeyValues};
use crate::kinematics::{Robot, ARM_JOINTS};

/// Task and simulator settings. Distances in meters, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// Seconds per control step.
    pub dt: f64,
    /// Maximum steps per episode.
    pub horizon: usize,
    /// Arm joint rate limit (rad/s).
    pub max_joint_speed: f64,
    /// Finger rate limit (m/s).
    pub max_finger_speed: f64,
    /// Extension range of each finger.
    pub finger_min: f64,
    pub finger_max: f64,
    /// Opening direction of the drawer in the world frame.
    pub drawer_axis: [f64; 3],
    /// Drawer frame position when closed.
    pub drawer_closed_pos: [f64; 3],
    /// Handle position relative to the drawer frame.
    pub handle_offset: [f64; 3],
    pub drawer_max_travel: f64,
    pub grasp_radius: f64,
    pub handle_thickness: f64,
    pub success_threshold: f64,
    /// Uniform noise added to the arm joints at reset; 0 starts exactly at home.
    pub init_joint_noise: f64,
    pub reward_weights: RewardWeights,
    pub fault: FaultScenario,
    pub robot: Robot,
    pub robot_file: Option<PathBuf>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            dt: 1.0 / 60.0,
            horizon: 500,
            max_joint_speed: 2.0,
            max_finger_speed: 0.1,
            finger_min: 0.0,
            finger_max: 0.04,
            drawer_axis: [-1.0, 0.0, 0.0],
            drawer_closed_pos: [0.75, 0.0, 0.317],
            handle_offset: [0.0, 0.0, 0.0],
            drawer_max_travel: 0.379,
            grasp_radius: 0.05,
            handle_thickness: 0.075,
            success_threshold: 0.2,
            init_joint_noise: 0.0,
            reward_weights: RewardWeights::default(),
            fault: FaultScenario::NoFault,
            robot: Robot::panda(),
            robot_file: None,
        }
    }
}

/// Every key accepted in the environment section of a config file.
pub const ENV_KEYS: &[&str] = &[
    "dt",
    "horizon",
    "max_joint_speed",
    "max_finger_speed",
    "finger_min",
    "finger_max",
    "drawer_axis",
    "drawer_closed_pos",
    "handle_offset",
    "drawer_max_travel",
    "grasp_radius",
    "handle_thickness",
    "success_threshold",
    "init_joint_noise",
    "w_dist",
    "w_rot",
    "w_handle",
    "w_open",
    "fault",
    "robot_file",
];

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("max_joint_speed", self.max_joint_speed),
            ("max_finger_speed", self.max_finger_speed),
            ("grasp_radius", self.grasp_radius),
            ("handle_thickness", self.handle_thickness),
            ("drawer_max_travel", self.drawer_max_travel),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "{} must be positive and finite, got {}",
                    name, v
                )));
            }
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= self.drawer_max_travel) {
            return Err(Error::config(format!(
                "success_threshold {} must lie in (0, drawer_max_travel = {}]",
                self.success_threshold, self.drawer_max_travel
            )));
        }
        if !(self.finger_min.is_finite()
            && self.finger_max.is_finite()
            && self.finger_min < self.finger_max)
        {
            return Err(Error::config("finger_min must be below finger_max"));
        }
        if !(self.init_joint_noise.is_finite() && self.init_joint_noise >= 0.0) {
            return Err(Error::config("init_joint_noise must be non-negative"));
        }
        let axis = Vector3::from(self.drawer_axis);
        if !(axis.norm().is_finite() && axis.norm() > 1e-9) {
            return Err(Error::config("drawer_axis must be a non-zero vector"));
        }
        for v in self.drawer_closed_pos.iter().chain(&self.handle_offset) {
            if !v.is_finite() {
                return Err(Error::config("drawer positions must be finite"));
            }
        }
        self.reward_weights.validate()?;
        self.fault.validate()?;
        self.robot.limits.validate()?;
        Ok(())
    }

    pub fn drawer_axis_unit(&self) -> Vector3<f64> {
        Vector3::from(self.drawer_axis).normalize()
    }

    /// Handle position for a given drawer opening.
    pub fn handle_position(&self, drawer_pos: f64) -> Vector3<f64> {
        Vector3::from(self.drawer_closed_pos)
            + Vector3::from(self.handle_offset)
            + self.drawer_axis_unit() * drawer_pos
    }

    /// Position limits of all nine controlled joints.
    pub fn joint_limits(&self) -> [(f64, f64); CONTROLLED_JOINTS] {
        let mut out = [(self.finger_min, self.finger_max); CONTROLLED_JOINTS];
        for (i, slot) in out.iter_mut().enumerate().take(ARM_JOINTS) {
            *slot = (self.robot.limits.min[i], self.robot.limits.max[i]);
        }
        out
    }

    /// Per-step displacement bound of each controlled joint.
    pub fn step_limits(&self) -> [f64; CONTROLLED_JOINTS] {
        let mut out = [self.max_finger_speed * self.dt; CONTROLLED_JOINTS];
        for slot in out.iter_mut().take(ARM_JOINTS) {
            *slot = self.max_joint_speed * self.dt;
        }
        out
    }

    /// Overrides fields from recognised keys; unknown keys are ignored here
    /// and rejected by the caller that knows the full key set.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.read_into("dt", &mut self.dt)?;
        kv.read_into("horizon", &mut self.horizon)?;
        kv.read_into("max_joint_speed", &mut self.max_joint_speed)?;
        kv.read_into("max_finger_speed", &mut self.max_finger_speed)?;
        kv.read_into("finger_min", &mut self.finger_min)?;
        kv.read_into("finger_max", &mut self.finger_max)?;
        kv.read_vec3("drawer_axis", &mut self.drawer_axis)?;
        kv.read_vec3("drawer_closed_pos", &mut self.drawer_closed_pos)?;
        kv.read_vec3("handle_offset", &mut self.handle_offset)?;
        kv.read_into("drawer_max_travel", &mut self.drawer_max_travel)?;
        kv.read_into("grasp_radius", &mut self.grasp_radius)?;
        kv.read_into("handle_thickness", &mut self.handle_thickness)?;
        kv.read_into("success_threshold", &mut self.success_threshold)?;
        kv.read_into("init_joint_noise", &mut self.init_joint_noise)?;
        kv.read_into("w_dist", &mut self.reward_weights.w_dist)?;
        kv.read_into("w_rot", &mut self.reward_weights.w_rot)?;
        kv.read_into("w_handle", &mut self.reward_weights.w_handle)?;
        kv.read_into("w_open", &mut self.reward_weights.w_open)?;
        kv.read_into("fault", &mut self.fault)?;
        if let Some(path) = kv.get("robot_file") {
            if path.is_empty() {
                self.robot_file = None;
                self.robot = Robot::panda();
            } else {
                let path = PathBuf::from(path);
                self.robot = Robot::load(&path)?;
                self.robot_file = Some(path);
            }
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(|k| ENV_KEYS.contains(&k))?;
        let mut cfg = EnvConfig::default();
        cfg.apply(kv)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write_key_values(&self, out: &mut String) {
        let _ = writeln!(out, "# environment");
        let _ = writeln!(out, "dt = {}", self.dt);
        let _ = writeln!(out, "horizon = {}", self.horizon);
        let _ = writeln!(out, "max_joint_speed = {}", self.max_joint_speed);
        let _ = writeln!(out, "max_finger_speed = {}", self.max_finger_speed);
        let _ = writeln!(out, "finger_min = {}", self.finger_min);
        let _ = writeln!(out, "finger_max = {}", self.finger_max);
        let _ = writeln!(out, "drawer_axis = {}", format_vec3(&self.drawer_axis));
        let _ = writeln!(
            out,
            "drawer_closed_pos = {}",
            format_vec3(&self.drawer_closed_pos)
        );
        let _ = writeln!(out, "handle_offset = {}", format_vec3(&self.handle_offset));
        let _ = writeln!(out, "drawer_max_travel = {}", self.drawer_max_travel);
        let _ = writeln!(out, "grasp_radius = {}", self.grasp_radius);
        let _ = writeln!(out, "handle_thickness = {}", self.handle_thickness);
        let _ = writeln!(out, "success_threshold = {}", self.success_threshold);
        let _ = writeln!(out, "init_joint_noise = {}", self.init_joint_noise);
        let _ = writeln!(out, "w_dist = {}", self.reward_weights.w_dist);
        let _ = writeln!(out, "w_rot = {}", self.reward_weights.w_rot);
        let _ = writeln!(out, "w_handle = {}", self.reward_weights.w_handle);
        let _ = writeln!(out, "w_open = {}", self.reward_weights.w_open);
        let _ = writeln!(out, "fault = {}", self.fault);
        let robot = self
            .robot_file
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "robot_file = {}", robot);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = EnvConfig::default();
        cfg.validate().unwrap();
        let mut text = String::new();
        cfg.write_key_values(&mut text);
        let back = EnvConfig::from_key_values(&KeyValues::parse(&text).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "dt = 0",
            "horizon = 0",
            "success_threshold = 0.5",
            "success_threshold = 0",
            "w_open = -1",
            "drawer_axis = 0, 0, 0",
            "fault = broken:11",
            "grasp_radius = nan",
            "mystery = 1",
        ] {
            let kv = KeyValues::parse(text).unwrap();
            assert!(EnvConfig::from_key_values(&kv).is_err(), "{text}");
        }
    }

    #[test]
    fn handle_moves_along_axis() {
        let cfg = EnvConfig::default();
        let h0 = cfg.handle_position(0.0);
        let h1 = cfg.handle_position(0.379);
        assert_eq!(h0, Vector3::new(0.75, 0.0, 0.317));
        assert!((h1 - Vector3::new(0.371, 0.0, 0.317)).norm() < 1e-12);
    }
}
