//! Denavit-Hartenberg model of the 7-DOF arm: link transforms, forward
//! kinematics, the geometric Jacobian, and pseudo-inverse IK.
//!
//! Every function here is a pure function of its arguments.

mod chain;
mod dh;
mod ik;
mod pinv;
mod pose;

pub use chain::{
    forward_kinematics, geometric_jacobian, jacobian_from_frames, link_transform, ChainFrames,
    Jacobian,
};
pub use dh::{DhRow, DhTable, JointLimits, JointMask, JointVector, Robot, ARM_JOINTS};
pub use ik::{ik_solve, IkOptions, IkResult};
pub use pinv::{pseudo_inverse, RELATIVE_CUTOFF};
pub use pose::{euler_xyz_matrix, pose_error, rotation_log, Pose};
