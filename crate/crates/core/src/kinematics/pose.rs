use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3, Vector6};

/// Rigid transform: orthonormal rotation plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Extrinsic X-Y-Z Euler angles: rotate about world x by `ex`, then
    /// world y by `ey`, then world z by `ez`, i.e. `R = Rz * Ry * Rx`.
    pub fn from_euler_xyz(euler: [f64; 3], position: [f64; 3]) -> Self {
        Pose {
            rotation: euler_xyz_matrix(euler),
            translation: Vector3::from(position),
        }
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation.column(1).into_owned()
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Homogeneous 4x4 representation, row-major.
    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2]],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    /// Inverse of `to_homogeneous`; the bottom row is ignored.
    pub fn from_homogeneous(m: &[[f64; 4]; 4]) -> Pose {
        let rotation = Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        Pose::new(rotation, Vector3::new(m[0][3], m[1][3], m[2][3]))
    }

    /// Unit quaternion `(w, x, y, z)` with `w >= 0`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let (w, v) = (q.w, q.imag());
        if w < 0.0 {
            [-w, -v[0], -v[1], -v[2]]
        } else {
            [w, v[0], v[1], v[2]]
        }
    }

    /// True when the rotation block is orthonormal with determinant +1.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        (gram - Matrix3::identity()).abs().max() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|v| v.is_finite())
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

impl<'a> Mul<&'a Pose> for &'a Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

pub fn euler_xyz_matrix([ex, ey, ez]: [f64; 3]) -> Matrix3<f64> {
    let (sx, cx) = ex.sin_cos();
    let (sy, cy) = ey.sin_cos();
    let (sz, cz) = ez.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// Axis-angle vector (axis scaled by angle in `[0, pi]`) of a rotation matrix.
///
/// At exactly pi the axis sign is ambiguous; the component of largest
/// magnitude is made positive.
pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = skew.norm();
    let theta = sin.atan2(cos);

    if theta < 1e-6 {
        // theta / sin(theta) = 1 + theta^2 / 6 + O(theta^4)
        return skew * (1.0 + theta * theta / 6.0);
    }
    if PI - theta > 1e-6 {
        return skew * (theta / sin);
    }

    // Near pi the skew part vanishes; recover the axis from the symmetric
    // part, (R + R^T) / 2 = cos I + (1 - cos) a a^T.
    let sym = (r + r.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
    let k = (0..3)
        .max_by(|&i, &j| outer[(i, i)].total_cmp(&outer[(j, j)]))
        .unwrap_or(0);
    let mut axis: Vector3<f64> = outer.column(k).into_owned() / outer[(k, k)].max(0.0).sqrt();
    axis.normalize_mut();
    // The skew part still carries the sign when it is above rounding noise.
    let flip = if skew.norm() > 1e-12 {
        axis.dot(&skew) < 0.0
    } else {
        axis[axis.iamax()] < 0.0
    };
    if flip {
        axis = -axis;
    }
    axis * theta
}

/// Six-vector `(desired - current)`: translation difference in meters, then
/// the axis-angle of `R_desired * R_current^T` in radians.
pub fn pose_error(current: &Pose, desired: &Pose) -> Vector6<f64> {
    let dp = desired.translation - current.translation;
    let dr = rotation_log(&(desired.rotation * current.rotation.transpose()));
    Vector6::new(dp[0], dp[1], dp[2], dr[0], dr[1], dr[2])
}
