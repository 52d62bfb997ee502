//! C ABI over the `ftarm` library.
//!
//! Every function returns an `FtarmStatus`. On failure a message is kept per
//! thread and can be copied out with `ftarm_last_error_message`. Handles are
//! opaque; each `*_new`/`*_load` must be paired with the matching `*_free`.
//! Array arguments are caller-owned buffers of the documented length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ftarm::environment::{Action, DrawerEnv, EnvConfig, ACTION_DIM, OBS_DIM};
use ftarm::faults::FaultScenario;
use ftarm::harness::{Controller, MeanPolicy};
use ftarm::keyvalue::KeyValues;
use ftarm::kinematics::{
    forward_kinematics, ik_solve, IkOptions, JointMask, JointVector, Pose, Robot, ARM_JOINTS,
};
use ftarm::nn::Checkpoint;
use ftarm::Error;

// Literal values so the generated header carries numbers; checked below.
pub const FTARM_OBS_DIM: usize = 23;
pub const FTARM_ACTION_DIM: usize = 9;
pub const FTARM_ARM_JOINTS: usize = 7;

const _: () = assert!(
    FTARM_OBS_DIM == OBS_DIM && FTARM_ACTION_DIM == ACTION_DIM && FTARM_ARM_JOINTS == ARM_JOINTS
);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtarmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Checkpoint = 5,
    EpisodeDone = 6,
    NonFinite = 7,
    Panic = 8,
    Internal = 9,
}

/// Drawer environment handle.
pub struct FtarmEnv {
    inner: DrawerEnv,
}

/// Actor network loaded from a checkpoint.
pub struct FtarmPolicy {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> FtarmStatus {
    match e {
        Error::Config(_)
        | Error::FaultSpec(_)
        | Error::JointIndex { .. }
        | Error::UnactuatedChain => FtarmStatus::Config,
        Error::Io(_) => FtarmStatus::Io,
        Error::Checkpoint(_) => FtarmStatus::Checkpoint,
        Error::TerminalState => FtarmStatus::EpisodeDone,
        Error::NonFinite(_) => FtarmStatus::NonFinite,
        Error::Dimension { .. } => FtarmStatus::InvalidArgument,
        _ => FtarmStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), FtarmStatus>) -> FtarmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtarmStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            FtarmStatus::Panic
        }
    }
}

fn lib<T>(r: ftarm::Result<T>) -> Result<T, FtarmStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn invalid(msg: &str) -> FtarmStatus {
    set_error(msg);
    FtarmStatus::InvalidArgument
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), FtarmStatus> {
    if p.is_null() {
        set_error(format!("{} is null", name));
        return Err(FtarmStatus::NullPointer);
    }
    Ok(())
}

/// Borrows a C string; null means "absent".
unsafe fn opt_str<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, FtarmStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| invalid(&format!("{} is not valid UTF-8", name)))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in bytes,
/// excluding the terminator.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an environment. `config_text` holds optional `key = value` lines
/// for environment settings and `fault` an optional scenario string such as
/// `broken:2`; either may be null. The handle is written to `out`.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_env_new(
    config_text: *const c_char,
    fault: *const c_char,
    seed: u64,
    out: *mut *mut FtarmEnv,
) -> FtarmStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let mut config = match opt_str(config_text, "config_text")? {
            Some(text) => {
                lib(KeyValues::parse(text).and_then(|kv| EnvConfig::from_key_values(&kv)))?
            }
            None => EnvConfig::default(),
        };
        if let Some(spec) = opt_str(fault, "fault")? {
            config.fault = lib(spec.parse::<FaultScenario>())?;
        }
        let (inner, _) = lib(DrawerEnv::new(config, seed))?;
        *out = Box::into_raw(Box::new(FtarmEnv { inner }));
        Ok(())
    })
}

/// Releases an environment handle.
///
/// # Safety
/// `env` must be null or a live handle from `ftarm_env_new`; it is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ftarm_env_free(env: *mut FtarmEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts a new episode; writes `FTARM_OBS_DIM` values to `obs_out`.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_env_reset(
    env: *mut FtarmEnv,
    seed: u64,
    obs_out: *mut f64,
) -> FtarmStatus {
    guard(|| {
        non_null(env, "env")?;
        non_null(obs_out, "obs_out")?;
        let obs = lib((*env).inner.reset(seed))?;
        ptr::copy_nonoverlapping(obs.0.as_ptr(), obs_out, OBS_DIM);
        Ok(())
    })
}

/// Applies `FTARM_ACTION_DIM` normalized targets. `obs_out` receives the next
/// observation; `reward_out`, `done_out` and `success_out` may be null.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_env_step(
    env: *mut FtarmEnv,
    action: *const f64,
    obs_out: *mut f64,
    reward_out: *mut f64,
    done_out: *mut bool,
    success_out: *mut bool,
) -> FtarmStatus {
    guard(|| {
        non_null(env, "env")?;
        non_null(action, "action")?;
        non_null(obs_out, "obs_out")?;
        let mut a = [0.0; ACTION_DIM];
        ptr::copy_nonoverlapping(action, a.as_mut_ptr(), ACTION_DIM);
        let r = lib((*env).inner.step(&Action(a)))?;
        ptr::copy_nonoverlapping(r.observation.0.as_ptr(), obs_out, OBS_DIM);
        if !reward_out.is_null() {
            *reward_out = r.reward.total;
        }
        if !done_out.is_null() {
            *done_out = r.done;
        }
        if !success_out.is_null() {
            *success_out = r.success;
        }
        Ok(())
    })
}

/// Current drawer opening in meters.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_env_drawer_position(
    env: *const FtarmEnv,
    out: *mut f64,
) -> FtarmStatus {
    guard(|| {
        non_null(env, "env")?;
        non_null(out, "out")?;
        *out = (*env).inner.state.drawer_pos;
        Ok(())
    })
}

/// Loads the actor (and critic, if present) from a checkpoint file.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_policy_load(
    path: *const c_char,
    out: *mut *mut FtarmPolicy,
) -> FtarmStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = opt_str(path, "path")?.ok_or_else(|| {
            set_error("path is null");
            FtarmStatus::NullPointer
        })?;
        let checkpoint = lib(Checkpoint::load(Path::new(path)))?;
        if checkpoint.actor.obs_dim() != OBS_DIM || checkpoint.actor.act_dim() != ACTION_DIM {
            set_error("checkpoint does not match the drawer task's observation and action sizes");
            return Err(FtarmStatus::Checkpoint);
        }
        *out = Box::into_raw(Box::new(FtarmPolicy { checkpoint }));
        Ok(())
    })
}

/// Releases a policy handle.
///
/// # Safety
/// `policy` must be null or a live handle from `ftarm_policy_load`; it is
/// invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ftarm_policy_free(policy: *mut FtarmPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Deterministic action (policy mean clamped to [-1, 1]) for one
/// observation.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_policy_act(
    policy: *const FtarmPolicy,
    obs: *const f64,
    action_out: *mut f64,
) -> FtarmStatus {
    guard(|| {
        non_null(policy, "policy")?;
        non_null(obs, "obs")?;
        non_null(action_out, "action_out")?;
        let mut o = ftarm::environment::Observation([0.0; OBS_DIM]);
        ptr::copy_nonoverlapping(obs, o.0.as_mut_ptr(), OBS_DIM);
        let a = lib(MeanPolicy(&(*policy).checkpoint.actor).act(&o, 0))?;
        ptr::copy_nonoverlapping(a.0.as_ptr(), action_out, ACTION_DIM);
        Ok(())
    })
}

/// End-effector pose of the default arm as a row-major 4x4 homogeneous
/// matrix (16 values).
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_forward_kinematics(
    joints: *const f64,
    pose_out: *mut f64,
) -> FtarmStatus {
    guard(|| {
        non_null(joints, "joints")?;
        non_null(pose_out, "pose_out")?;
        let mut q = [0.0; ARM_JOINTS];
        ptr::copy_nonoverlapping(joints, q.as_mut_ptr(), ARM_JOINTS);
        let m = forward_kinematics(&Robot::panda().table, &JointVector(q)).to_homogeneous();
        for (r, row) in m.iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), pose_out.add(4 * r), 4);
        }
        Ok(())
    })
}

/// Pseudo-inverse IK on the default arm. `target` is a row-major 4x4
/// homogeneous pose; `locked_joint` < 0 locks nothing. Writes the solution
/// to `joints_out` (7 values); `residual_out` and `converged_out` may be null.
///
/// # Safety
/// Non-null pointer arguments must be valid for the documented lengths, and
/// handles must be live handles created by this library.
#[no_mangle]
pub unsafe extern "C" fn ftarm_ik_solve(
    initial: *const f64,
    target: *const f64,
    locked_joint: i32,
    step: f64,
    tolerance: f64,
    max_iters: u32,
    joints_out: *mut f64,
    residual_out: *mut f64,
    converged_out: *mut bool,
) -> FtarmStatus {
    guard(|| {
        non_null(initial, "initial")?;
        non_null(target, "target")?;
        non_null(joints_out, "joints_out")?;
        if !(step > 0.0 && step.is_finite() && tolerance > 0.0 && tolerance.is_finite()) {
            return Err(invalid("step and tolerance must be positive"));
        }
        let mut q = [0.0; ARM_JOINTS];
        ptr::copy_nonoverlapping(initial, q.as_mut_ptr(), ARM_JOINTS);
        let mut m = [[0.0; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            ptr::copy_nonoverlapping(target.add(4 * r), row.as_mut_ptr(), 4);
        }
        let pose = Pose::from_homogeneous(&m);
        if !pose.is_valid(1e-6) {
            return Err(invalid("target is not a rigid transform"));
        }
        let locked = if locked_joint < 0 {
            JointMask::none()
        } else {
            lib(JointMask::single(locked_joint as usize))?
        };
        let options = IkOptions {
            step,
            tolerance,
            max_iters: max_iters as usize,
        };
        let r = lib(ik_solve(
            &Robot::panda(),
            &JointVector(q),
            &pose,
            &locked,
            &options,
        ))?;
        ptr::copy_nonoverlapping(r.joints.0.as_ptr(), joints_out, ARM_JOINTS);
        if !residual_out.is_null() {
            *residual_out = r.residual;
        }
        if !converged_out.is_null() {
            *converged_out = r.converged;
        }
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ftarm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
