use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{Rotation3, UnitQuaternion};

use crate::error::{Error, Result};
use crate::kinematics::{
    forward_kinematics, ik_solve, IkOptions, JointMask, Pose, Robot, ARM_JOINTS,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// Extrinsic x-y-z Euler angles, radians.
    pub euler: [f64; 3],
    pub position: [f64; 3],
}

impl Waypoint {
    pub fn pose(&self) -> Pose {
        Pose::from_euler_xyz(self.euler, self.position)
    }

    pub fn is_finite(&self) -> bool {
        self.euler
            .iter()
            .chain(&self.position)
            .all(|v| v.is_finite())
    }
}

/// Above the drawer.
pub const WAYPOINT_INITIAL: Waypoint = Waypoint {
    euler: [FRAC_PI_2, 0.0, PI],
    position: [0.5, 0.0, 0.625],
};
/// At the closed drawer's handle.
pub const WAYPOINT_DRAWER: Waypoint = Waypoint {
    euler: [0.0, 0.0, FRAC_PI_2],
    position: [0.75, 0.0, 0.317],
};
/// Drawer pulled open.
pub const WAYPOINT_PULLED: Waypoint = Waypoint {
    euler: [FRAC_PI_2, 0.0, PI],
    position: [0.371, 0.0, 0.317],
};

/// Index of the leg that ends at the drawer waypoint.
pub const DRAWER_LEG: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct IkDemoConfig {
    pub waypoints: [Waypoint; 3],
    pub locked: Option<usize>,
    pub samples_per_leg: usize,
    pub options: IkOptions,
}

impl Default for IkDemoConfig {
    fn default() -> Self {
        IkDemoConfig {
            waypoints: [WAYPOINT_INITIAL, WAYPOINT_DRAWER, WAYPOINT_PULLED],
            locked: None,
            samples_per_leg: 50,
            options: IkOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub leg: usize,
    pub desired: Pose,
    pub achieved: Pose,
    pub joints: [f64; ARM_JOINTS],
    pub residual: f64,
    pub position_deviation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkDemoResult {
    pub points: Vec<TrajectoryPoint>,
}

/// `n` poses from `a` (exclusive) to `b` (inclusive): linear in position,
/// spherical-linear in rotation.
pub fn interpolate(a: &Pose, b: &Pose, n: usize) -> Vec<Pose> {
    let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix(&a.rotation));
    let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix(&b.rotation));
    (1..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let rotation = if k == n {
                b.rotation
            } else if a.rotation == b.rotation {
                a.rotation
            } else {
                // Antipodal rotations have no unique path; fall back to nlerp.
                let q = qa
                    .try_slerp(&qb, t, 1e-12)
                    .unwrap_or_else(|| qa.nlerp(&qb, t));
                q.to_rotation_matrix().into_inner()
            };
            Pose::new(rotation, a.translation.lerp(&b.translation, t))
        })
        .collect()
}

/// Tracks home -> p_i -> p_d -> p_p, solving IK at every sample and starting
/// each solve from the previous solution.
pub fn ik_demo(robot: &Robot, config: &IkDemoConfig) -> Result<IkDemoResult> {
    if config.samples_per_leg == 0 {
        return Err(Error::config("samples_per_leg must be at least 1"));
    }
    if let Some(w) = config.waypoints.iter().find(|w| !w.is_finite()) {
        return Err(Error::config(format!("waypoint is not finite: {:?}", w)));
    }
    let locked = match config.locked {
        Some(j) => JointMask::single(j)?,
        None => JointMask::none(),
    };
    let mut q = robot.home();
    let mut from = forward_kinematics(&robot.table, &q);
    let mut points = Vec::with_capacity(3 * config.samples_per_leg);
    for (leg, w) in config.waypoints.iter().enumerate() {
        let to = w.pose();
        for desired in interpolate(&from, &to, config.samples_per_leg) {
            let r = ik_solve(robot, &q, &desired, &locked, &config.options)?;
            q = r.joints;
            points.push(TrajectoryPoint {
                leg,
                achieved: forward_kinematics(&robot.table, &q),
                desired,
                joints: q.0,
                residual: r.residual,
                position_deviation: r.position_residual(),
                converged: r.converged,
            });
        }
        from = to;
    }
    Ok(IkDemoResult { points })
}

impl IkDemoResult {
    pub fn converged_count(&self) -> usize {
        self.points.iter().filter(|p| p.converged).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    pub fn max_position_deviation(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.position_deviation)
            .fold(0.0, f64::max)
    }

    /// Final sample of a leg, i.e. the solve aimed exactly at its waypoint.
    pub fn leg_end(&self, leg: usize) -> Option<&TrajectoryPoint> {
        self.points.iter().rev().find(|p| p.leg == leg)
    }

    pub fn drawer_point(&self) -> Option<&TrajectoryPoint> {
        self.leg_end(DRAWER_LEG)
    }

    pub fn drawer_reached(&self, tolerance: f64) -> bool {
        self.drawer_point().is_some_and(|p| p.residual <= tolerance)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", IK_TRAJECTORY_HEADER)?;
        for (i, p) in self.points.iter().enumerate() {
            let d = p.desired.translation;
            let a = p.achieved.translation;
            let [qw, qx, qy, qz] = p.achieved.quaternion_wxyz();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                i,
                p.leg,
                d.x,
                d.y,
                d.z,
                a.x,
                a.y,
                a.z,
                qw,
                qx,
                qy,
                qz,
                p.residual,
                u8::from(p.converged)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self, config: &IkDemoConfig) -> String {
        let mut s = String::new();
        let locked = config
            .locked
            .map(|j| j.to_string())
            .unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "locked_joint = {}", locked);
        let _ = writeln!(s, "step = {}", config.options.step);
        let _ = writeln!(s, "tolerance = {}", config.options.tolerance);
        let _ = writeln!(s, "max_iters = {}", config.options.max_iters);
        let _ = writeln!(s, "targets = {}", self.points.len());
        let _ = writeln!(s, "converged = {}", self.converged_count());
        let _ = writeln!(s, "max_residual = {}", self.max_residual());
        let _ = writeln!(
            s,
            "max_position_deviation_m = {}",
            self.max_position_deviation()
        );
        for leg in 0..config.waypoints.len() {
            if let Some(p) = self.leg_end(leg) {
                let _ = writeln!(
                    s,
                    "waypoint_{} residual = {} position_deviation_m = {} converged = {}",
                    leg, p.residual, p.position_deviation, p.converged
                );
            }
        }
        let _ = writeln!(
            s,
            "drawer_reached = {}",
            self.drawer_reached(config.options.tolerance)
        );
        s
    }
}

pub const IK_TRAJECTORY_HEADER: &str =
    "step,leg,desired_x,desired_y,desired_z,x,y,z,qw,qx,qy,qz,residual,converged";
