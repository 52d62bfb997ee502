use std::io::{self, Write};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::EnvConfig;
use super::reward::{
    around_handle_reward, distance_reward, open_reward, rotation_reward, total_reward,
    RewardBreakdown,
};
use crate::error::{Error, Result};
use crate::faults::{apply_fault_mask, FaultState, CONTROLLED_JOINTS};
use crate::kinematics::{forward_kinematics, JointVector, ARM_JOINTS};

pub const OBS_DIM: usize = 23;
pub const ACTION_DIM: usize = CONTROLLED_JOINTS;

/// Joint angles (9), joint velocities (9), drawer position, drawer
/// velocity, then the handle position minus the gripper position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn joints(&self) -> &[f64] {
        &self.0[0..9]
    }

    pub fn joint_velocities(&self) -> &[f64] {
        &self.0[9..18]
    }

    pub fn drawer_pos(&self) -> f64 {
        self.0[18]
    }

    pub fn drawer_vel(&self) -> f64 {
        self.0[19]
    }

    pub fn handle_displacement(&self) -> [f64; 3] {
        [self.0[20], self.0[21], self.0[22]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Normalized joint targets; each entry maps `[-1, 1]` onto the joint's range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action(pub [f64; ACTION_DIM]);

impl Action {
    /// The action whose targets equal the given joint positions.
    pub fn from_joints(joints: &[f64; CONTROLLED_JOINTS], config: &EnvConfig) -> Action {
        let limits = config.joint_limits();
        let mut out = [0.0; ACTION_DIM];
        for (i, u) in out.iter_mut().enumerate() {
            let (lo, hi) = limits[i];
            *u = 2.0 * (joints[i] - lo) / (hi - lo) - 1.0;
        }
        Action(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub joints: [f64; CONTROLLED_JOINTS],
    pub joint_velocities: [f64; CONTROLLED_JOINTS],
    pub drawer_pos: f64,
    pub drawer_vel: f64,
    pub step_index: usize,
    pub grasped: bool,
    pub done: bool,
    pub success: bool,
    pub fault_state: FaultState,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub step_index: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub success: bool,
    pub info: StepInfo,
}

/// Flange position and axes, plus the two fingertip points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperFrame {
    pub position: Vector3<f64>,
    pub forward: Vector3<f64>,
    pub up: Vector3<f64>,
    pub left_finger: Vector3<f64>,
    pub right_finger: Vector3<f64>,
    pub finger_gap: f64,
}

impl GripperFrame {
    pub fn from_joints(joints: &[f64; CONTROLLED_JOINTS], config: &EnvConfig) -> GripperFrame {
        let mut arm = JointVector([0.0; ARM_JOINTS]);
        arm.0.copy_from_slice(&joints[..ARM_JOINTS]);
        let pose = forward_kinematics(&config.robot.table, &arm);
        let up = pose.y_axis();
        let (el, er) = (joints[7], joints[8]);
        GripperFrame {
            position: pose.translation,
            forward: pose.z_axis(),
            up,
            left_finger: pose.translation + up * el,
            right_finger: pose.translation - up * er,
            finger_gap: el + er,
        }
    }
}

/// Home arm configuration with both fingers fully open.
pub fn home_joints(config: &EnvConfig) -> [f64; CONTROLLED_JOINTS] {
    let mut q = [config.finger_max; CONTROLLED_JOINTS];
    q[..ARM_JOINTS].copy_from_slice(&config.robot.home().0);
    q
}

pub fn reset(config: &EnvConfig, seed: u64) -> Result<(EnvState, Observation)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joints = home_joints(config);
    if config.init_joint_noise > 0.0 {
        let n = config.init_joint_noise;
        let limits = config.joint_limits();
        for (i, q) in joints.iter_mut().enumerate().take(ARM_JOINTS) {
            *q = (*q + rng.random_range(-n..=n)).clamp(limits[i].0, limits[i].1);
        }
    }
    let state = EnvState {
        joints,
        joint_velocities: [0.0; CONTROLLED_JOINTS],
        drawer_pos: 0.0,
        drawer_vel: 0.0,
        step_index: 0,
        grasped: false,
        done: false,
        success: false,
        fault_state: FaultState::new(config.fault, seed)?,
        rng,
    };
    let obs = observe(&state, config);
    Ok((state, obs))
}

pub fn observe(state: &EnvState, config: &EnvConfig) -> Observation {
    let gripper = GripperFrame::from_joints(&state.joints, config);
    observe_with(state, &gripper, config)
}

fn observe_with(state: &EnvState, gripper: &GripperFrame, config: &EnvConfig) -> Observation {
    let mut o = [0.0; OBS_DIM];
    o[0..9].copy_from_slice(&state.joints);
    o[9..18].copy_from_slice(&state.joint_velocities);
    o[18] = state.drawer_pos;
    o[19] = state.drawer_vel;
    let disp = config.handle_position(state.drawer_pos) - gripper.position;
    o[20..23].copy_from_slice(disp.as_slice());
    Observation(o)
}

/// Maps normalized targets onto joint ranges; entries outside `[-1, 1]`
/// saturate first.
pub fn clamp_action(
    action: &Action,
    limits: &[(f64, f64); CONTROLLED_JOINTS],
) -> [f64; CONTROLLED_JOINTS] {
    let mut out = [0.0; CONTROLLED_JOINTS];
    for (i, t) in out.iter_mut().enumerate() {
        let u = action.0[i];
        // NaN saturates to the lower bound rather than propagating.
        let u = if u.is_nan() { -1.0 } else { u.clamp(-1.0, 1.0) };
        let (lo, hi) = limits[i];
        *t = (lo + (u + 1.0) * 0.5 * (hi - lo)).clamp(lo, hi);
    }
    out
}

/// Advances the drawer and the grasp flag for a gripper moving from `prev`
/// to `next`. Returns the new drawer position and grasp flag.
pub fn grasp_update(
    drawer_pos: f64,
    grasped: bool,
    prev: &GripperFrame,
    next: &GripperFrame,
    config: &EnvConfig,
) -> (f64, bool) {
    if grasped {
        let pull = (next.position - prev.position).dot(&config.drawer_axis_unit());
        let pos = (drawer_pos + pull).clamp(0.0, config.drawer_max_travel);
        let d = (next.position - config.handle_position(pos)).norm();
        (pos, d <= 2.0 * config.grasp_radius)
    } else {
        let handle = config.handle_position(drawer_pos);
        let d = (next.position - handle).norm();
        let around =
            around_handle_reward(next.left_finger[2], next.right_finger[2], handle[2]) > 0.0;
        let closed = next.finger_gap <= config.handle_thickness;
        (drawer_pos, d <= config.grasp_radius && around && closed)
    }
}

pub fn compute_reward(
    gripper: &GripperFrame,
    drawer_pos: f64,
    config: &EnvConfig,
) -> Result<RewardBreakdown> {
    let handle = config.handle_position(drawer_pos);
    let (d, r_dist) = distance_reward(&gripper.position, &handle);
    let inward = -config.drawer_axis_unit();
    let (dot1, dot2, r_rot) =
        rotation_reward(&gripper.forward, &inward, &gripper.up, &Vector3::z())?;
    let r_handle = around_handle_reward(gripper.left_finger[2], gripper.right_finger[2], handle[2]);
    let r_open = open_reward(drawer_pos, r_handle);
    let mut b = RewardBreakdown {
        r_dist,
        r_rot,
        r_handle,
        r_open,
        total: 0.0,
        d,
        dot1,
        dot2,
    };
    b.total = total_reward(&b, &config.reward_weights);
    debug_assert!(b.r_dist > 0.0 && b.r_dist <= 1.0, "r_dist {}", b.r_dist);
    debug_assert!(
        (-1.0 - 1e-12..=1.0 + 1e-12).contains(&b.r_rot),
        "r_rot {}",
        b.r_rot
    );
    debug_assert!(
        b.r_handle == 0.0 || b.r_handle == 0.5,
        "r_handle {}",
        b.r_handle
    );
    Ok(b)
}

pub fn step(state: &mut EnvState, action: &Action, config: &EnvConfig) -> Result<StepResult> {
    if state.done {
        return Err(Error::TerminalState);
    }
    let targets = clamp_action(action, &config.joint_limits());
    let targets = apply_fault_mask(
        &targets,
        &state.joints,
        &mut state.fault_state,
        state.step_index,
        config.horizon,
    )?;

    let prev_gripper = GripperFrame::from_joints(&state.joints, config);
    let step_limits = config.step_limits();
    let mut joints = state.joints;
    for i in 0..CONTROLLED_JOINTS {
        let lim = step_limits[i];
        joints[i] += (targets[i] - joints[i]).clamp(-lim, lim);
    }
    let gripper = GripperFrame::from_joints(&joints, config);
    let (drawer_pos, grasped) = grasp_update(
        state.drawer_pos,
        state.grasped,
        &prev_gripper,
        &gripper,
        config,
    );

    for ((v, q), prev) in state
        .joint_velocities
        .iter_mut()
        .zip(&joints)
        .zip(&state.joints)
    {
        *v = (q - prev) / config.dt;
    }
    state.drawer_vel = (drawer_pos - state.drawer_pos) / config.dt;
    state.joints = joints;
    state.drawer_pos = drawer_pos;
    state.grasped = grasped;
    state.step_index += 1;

    let reward = compute_reward(&gripper, drawer_pos, config)?;
    let success = drawer_pos >= config.success_threshold;
    let done = success || state.step_index >= config.horizon;
    state.done = done;
    state.success = success;

    let observation = observe_with(state, &gripper, config);
    if !observation.is_finite() {
        return Err(Error::NonFinite("observation"));
    }
    Ok(StepResult {
        observation,
        reward,
        done,
        success,
        info: StepInfo {
            step_index: state.step_index,
            time: state.step_index as f64 * config.dt,
        },
    })
}

/// Owned environment: a config plus the state of the running episode.
#[derive(Debug, Clone)]
pub struct DrawerEnv {
    pub config: EnvConfig,
    pub state: EnvState,
}

impl DrawerEnv {
    pub fn new(config: EnvConfig, seed: u64) -> Result<(DrawerEnv, Observation)> {
        let (state, obs) = reset(&config, seed)?;
        Ok((DrawerEnv { config, state }, obs))
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let (state, obs) = reset(&self.config, seed)?;
        self.state = state;
        Ok(obs)
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        step(&mut self.state, action, &self.config)
    }

    pub fn observation(&self) -> Observation {
        observe(&self.state, &self.config)
    }
}

pub const STEP_LOG_HEADER: &str =
    "episode,step,reward_total,r_dist,r_rot,r_handle,r_open,drawer_pos,success";

/// Per-step diagnostic CSV.
pub struct StepLogger<W: Write> {
    out: W,
}

impl<W: Write> StepLogger<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{}", STEP_LOG_HEADER)?;
        Ok(StepLogger { out })
    }

    pub fn log(&mut self, episode: usize, result: &StepResult, drawer_pos: f64) -> io::Result<()> {
        let r = &result.reward;
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{}",
            episode,
            result.info.step_index,
            r.total,
            r.r_dist,
            r.r_rot,
            r.r_handle,
            r.r_open,
            drawer_pos,
            u8::from(result.success)
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn observation_csv_header() -> String {
    let mut cols: Vec<String> = Vec::with_capacity(OBS_DIM);
    cols.extend((0..9).map(|i| format!("q{i}")));
    cols.extend((0..9).map(|i| format!("dq{i}")));
    cols.extend(["drawer_pos", "drawer_vel", "dx", "dy", "dz"].map(String::from));
    cols.join(",")
}

/// One CSV row; `{}` on f64 prints the shortest text that parses back to the
/// same value.
pub fn observation_csv_row(obs: &Observation) -> String {
    obs.0
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_observation_csv_row(line: &str) -> Result<Observation> {
    let mut o = [0.0; OBS_DIM];
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != OBS_DIM {
        return Err(Error::Dimension {
            expected: OBS_DIM,
            got: fields.len(),
        });
    }
    for (slot, f) in o.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|_| Error::config(format!("bad observation field {:?}", f)))?;
    }
    Ok(Observation(o))
}
