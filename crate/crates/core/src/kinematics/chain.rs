//! Forward kinematics and the geometric Jacobian of a DH chain.

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::dh::{DhRow, DhTable, JointMask, JointVector, ARM_JOINTS};
use super::pose::Pose;
use crate::error::{Error, Result};

/// Standard DH link transform:
///
/// ```text
/// | cθ  -sθ·cα   sθ·sα   a·cθ |
/// | sθ   cθ·cα  -cθ·sα   a·sθ |
/// | 0    sα      cα      d    |
/// ```
pub fn link_transform(row: &DhRow, theta: f64) -> Pose {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Pose {
        rotation: Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
        translation: Vector3::new(row.a * ct, row.a * st, row.d),
    }
}

/// Cumulative frames `T_0^0 (identity), T_0^1, ..., T_0^7`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFrames {
    frames: [Pose; ARM_JOINTS + 1],
}

impl ChainFrames {
    pub fn compute(table: &DhTable, joints: &JointVector) -> Self {
        let mut frames = [Pose::identity(); ARM_JOINTS + 1];
        for (i, row) in table.rows().iter().enumerate() {
            frames[i + 1] = frames[i] * link_transform(row, joints[i]);
        }
        ChainFrames { frames }
    }

    pub fn frame(&self, i: usize) -> &Pose {
        &self.frames[i]
    }

    /// Origin `o_i` of frame `i` (0 = base).
    pub fn origin(&self, i: usize) -> Vector3<f64> {
        self.frames[i].translation
    }

    /// Joint axis `z_i` of frame `i` (0 = base).
    pub fn z_axis(&self, i: usize) -> Vector3<f64> {
        self.frames[i].z_axis()
    }

    pub fn end_effector(&self) -> &Pose {
        &self.frames[ARM_JOINTS]
    }
}

pub fn forward_kinematics(table: &DhTable, joints: &JointVector) -> Pose {
    *ChainFrames::compute(table, joints).end_effector()
}

/// 6 x k geometric Jacobian; rows are linear then angular velocity, columns
/// follow the unlocked joints in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub entries: DMatrix<f64>,
    pub joints: Vec<usize>,
}

impl Jacobian {
    pub fn columns(&self) -> usize {
        self.joints.len()
    }
}

pub fn geometric_jacobian(
    table: &DhTable,
    joints: &JointVector,
    locked: &JointMask,
) -> Result<Jacobian> {
    let frames = ChainFrames::compute(table, joints);
    jacobian_from_frames(&frames, locked)
}

pub fn jacobian_from_frames(frames: &ChainFrames, locked: &JointMask) -> Result<Jacobian> {
    let free: Vec<usize> = locked.unlocked().collect();
    if free.is_empty() {
        return Err(Error::UnactuatedChain);
    }
    let tip = frames.origin(ARM_JOINTS);
    let mut entries = DMatrix::zeros(6, free.len());
    for (col, &j) in free.iter().enumerate() {
        // Joint j (0-based) rotates about z of the frame preceding its link.
        let z = frames.z_axis(j);
        let lin = z.cross(&(tip - frames.origin(j)));
        for r in 0..3 {
            entries[(r, col)] = lin[r];
            entries[(r + 3, col)] = z[r];
        }
    }
    Ok(Jacobian {
        entries,
        joints: free,
    })
}
