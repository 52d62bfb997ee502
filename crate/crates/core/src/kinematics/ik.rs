//! Iterative Jacobian pseudo-inverse IK with optional locked joints.

use nalgebra::{DVector, Vector6};

use super::chain::{jacobian_from_frames, ChainFrames};
use super::dh::{JointMask, JointVector, Robot};
use super::pinv::pseudo_inverse;
use super::pose::{pose_error, Pose};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    /// Fraction of the pseudo-inverse correction applied per iteration.
    pub step: f64,
    /// Convergence threshold on the Euclidean norm of the 6-vector pose error.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            step: 0.01,
            tolerance: 1e-4,
            max_iters: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub joints: JointVector,
    pub converged: bool,
    /// Number of joint updates applied before exit.
    pub iterations: usize,
    /// Pose error at `joints` (translation then axis-angle).
    pub error: Vector6<f64>,
    /// `error.norm()`.
    pub residual: f64,
}

impl IkResult {
    pub fn position_residual(&self) -> f64 {
        self.error.fixed_rows::<3>(0).norm()
    }
}

/// Repeats `q <- clamp(q + step * J^+ * e)` over the unlocked joints until the
/// error norm drops to the tolerance or the iteration budget is spent.
/// Locked joints keep their initial value exactly.
pub fn ik_solve(
    robot: &Robot,
    initial: &JointVector,
    target: &Pose,
    locked: &JointMask,
    options: &IkOptions,
) -> Result<IkResult> {
    if locked.unlocked_count() == 0 {
        return Err(Error::UnactuatedChain);
    }
    let mut q = *initial;
    let mut iterations = 0;
    loop {
        let frames = ChainFrames::compute(&robot.table, &q);
        let error = pose_error(frames.end_effector(), target);
        let residual = error.norm();
        if residual <= options.tolerance || iterations >= options.max_iters || !residual.is_finite()
        {
            return Ok(IkResult {
                joints: q,
                converged: residual <= options.tolerance,
                iterations,
                error,
                residual,
            });
        }
        let jac = jacobian_from_frames(&frames, locked)?;
        let delta = pseudo_inverse(&jac.entries) * DVector::from_column_slice(error.as_slice());
        for (col, &j) in jac.joints.iter().enumerate() {
            q[j] = robot.limits.clamp(j, q[j] + options.step * delta[col]);
        }
        iterations += 1;
    }
}
