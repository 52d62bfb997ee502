//! Denavit-Hartenberg description of the 7-DOF arm and its joint limits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::ops::{Index, IndexMut};
use std::path::Path;

use crate::error::{Error, Result};
use crate::keyvalue::KeyValues;

/// Number of revolute joints in the arm chain.
pub const ARM_JOINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    /// Reference joint value, used as the home configuration.
    pub theta_home: f64,
}

impl DhRow {
    pub const fn new(d: f64, a: f64, alpha: f64, theta_home: f64) -> Self {
        DhRow {
            d,
            a,
            alpha,
            theta_home,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.d.is_finite() || !self.a.is_finite() {
            return Err(Error::config("DH offsets d and a must be finite"));
        }
        for (name, v) in [("alpha", self.alpha), ("theta_home", self.theta_home)] {
            if !(v.is_finite() && (-PI..=PI).contains(&v)) {
                return Err(Error::config(format!(
                    "DH {} = {} is outside [-pi, pi]",
                    name, v
                )));
            }
        }
        Ok(())
    }
}

/// Ordered base-to-wrist DH rows; always exactly seven.
#[derive(Debug, Clone, PartialEq)]
pub struct DhTable {
    rows: [DhRow; ARM_JOINTS],
}

impl DhTable {
    pub fn new(rows: &[DhRow]) -> Result<Self> {
        if rows.len() != ARM_JOINTS {
            return Err(Error::Dimension {
                expected: ARM_JOINTS,
                got: rows.len(),
            });
        }
        for row in rows {
            row.validate()?;
        }
        let mut out = [DhRow::new(0.0, 0.0, 0.0, 0.0); ARM_JOINTS];
        out.copy_from_slice(rows);
        Ok(DhTable { rows: out })
    }

    /// Franka Emika Panda parameters with the published home posture.
    pub fn panda() -> Self {
        DhTable {
            rows: [
                DhRow::new(0.333, 0.0, 0.0, 1.157),
                DhRow::new(0.0, 0.0, -FRAC_PI_2, -1.066),
                DhRow::new(0.316, 0.0, FRAC_PI_2, -0.155),
                DhRow::new(0.0, 0.0825, FRAC_PI_2, -2.239),
                DhRow::new(0.384, -0.0825, -FRAC_PI_2, -1.841),
                DhRow::new(0.0, 0.0, FRAC_PI_2, 1.003),
                DhRow::new(0.0, 0.088, 0.0, 0.469),
            ],
        }
    }

    pub fn rows(&self) -> &[DhRow; ARM_JOINTS] {
        &self.rows
    }

    pub fn home(&self) -> JointVector {
        JointVector(self.rows.map(|r| r.theta_home))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub min: [f64; ARM_JOINTS],
    pub max: [f64; ARM_JOINTS],
}

impl JointLimits {
    /// Manufacturer position limits of the Panda arm joints.
    pub fn panda() -> Self {
        JointLimits {
            min: [
                -2.8973, -1.7628, -2.8973, -3.0718, -2.8973, -0.0175, -2.8973,
            ],
            max: [2.8973, 1.7628, 2.8973, -0.0698, 2.8973, 3.7525, 2.8973],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..ARM_JOINTS {
            if !(self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] < self.max[i]) {
                return Err(Error::config(format!(
                    "joint {} limits [{}, {}] are not a finite, non-empty interval",
                    i, self.min[i], self.max[i]
                )));
            }
        }
        Ok(())
    }

    pub fn clamp(&self, joint: usize, value: f64) -> f64 {
        value.clamp(self.min[joint], self.max[joint])
    }

    pub fn contains(&self, joints: &JointVector) -> bool {
        (0..ARM_JOINTS).all(|i| (self.min[i]..=self.max[i]).contains(&joints[i]))
    }
}

/// A kinematic chain plus the limits its joints are clamped to.
#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub table: DhTable,
    pub limits: JointLimits,
}

impl Default for Robot {
    fn default() -> Self {
        Robot::panda()
    }
}

impl Robot {
    pub fn panda() -> Self {
        Robot {
            table: DhTable::panda(),
            limits: JointLimits::panda(),
        }
    }

    pub fn home(&self) -> JointVector {
        self.table.home()
    }

    /// Reads a robot description. Keys (joint index `N` in `0..7`):
    /// `dh.N.d`, `dh.N.a`, `dh.N.alpha`, `dh.N.theta_home`, `limit.N.min`,
    /// `limit.N.max`. Keys that are absent keep their Panda value.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(is_robot_key)?;
        let mut robot = Robot::panda();
        let mut rows = *robot.table.rows();
        for (i, row) in rows.iter_mut().enumerate() {
            kv.read_into(&format!("dh.{i}.d"), &mut row.d)?;
            kv.read_into(&format!("dh.{i}.a"), &mut row.a)?;
            kv.read_into(&format!("dh.{i}.alpha"), &mut row.alpha)?;
            kv.read_into(&format!("dh.{i}.theta_home"), &mut row.theta_home)?;
            kv.read_into(&format!("limit.{i}.min"), &mut robot.limits.min[i])?;
            kv.read_into(&format!("limit.{i}.max"), &mut robot.limits.max[i])?;
        }
        robot.table = DhTable::new(&rows)?;
        robot.limits.validate()?;
        if !robot.limits.contains(&robot.home()) {
            return Err(Error::config(
                "home configuration lies outside the joint limits",
            ));
        }
        Ok(robot)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn to_key_values_text(&self) -> String {
        let mut out =
            String::from("# robot description: DH rows and joint limits, joint index 0..6\n");
        for (i, row) in self.table.rows().iter().enumerate() {
            let _ = writeln!(out, "dh.{i}.d = {}", row.d);
            let _ = writeln!(out, "dh.{i}.a = {}", row.a);
            let _ = writeln!(out, "dh.{i}.alpha = {}", row.alpha);
            let _ = writeln!(out, "dh.{i}.theta_home = {}", row.theta_home);
            let _ = writeln!(out, "limit.{i}.min = {}", self.limits.min[i]);
            let _ = writeln!(out, "limit.{i}.max = {}", self.limits.max[i]);
        }
        out
    }
}

fn is_robot_key(key: &str) -> bool {
    let parts: Vec<&str> = key.split('.').collect();
    let [group, index, field] = parts.as_slice() else {
        return false;
    };
    let index_ok = index.parse::<usize>().is_ok_and(|i| i < ARM_JOINTS);
    index_ok
        && match *group {
            "dh" => matches!(*field, "d" | "a" | "alpha" | "theta_home"),
            "limit" => matches!(*field, "min" | "max"),
            _ => false,
        }
}

/// Seven arm joint angles in radians, base to wrist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointVector(pub [f64; ARM_JOINTS]);

impl JointVector {
    pub fn zeros() -> Self {
        JointVector([0.0; ARM_JOINTS])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Which arm joints are locked (held fixed) during IK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JointMask {
    locked: [bool; ARM_JOINTS],
}

impl JointMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        JointMask {
            locked: [true; ARM_JOINTS],
        }
    }

    pub fn single(joint: usize) -> Result<Self> {
        let mut mask = Self::none();
        mask.lock(joint)?;
        Ok(mask)
    }

    pub fn lock(&mut self, joint: usize) -> Result<()> {
        if joint >= ARM_JOINTS {
            return Err(Error::JointIndex {
                index: joint,
                count: ARM_JOINTS,
            });
        }
        self.locked[joint] = true;
        Ok(())
    }

    pub fn is_locked(&self, joint: usize) -> bool {
        self.locked[joint]
    }

    pub fn unlocked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..ARM_JOINTS).filter(move |&i| !self.locked[i])
    }

    pub fn unlocked_count(&self) -> usize {
        self.locked.iter().filter(|l| !**l).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panda_home_is_within_limits() {
        let robot = Robot::panda();
        assert!(robot.limits.contains(&robot.home()));
        assert_eq!(robot.home()[2], -0.155);
    }

    #[test]
    fn table_requires_seven_valid_rows() {
        let rows = *DhTable::panda().rows();
        assert!(DhTable::new(&rows[..6]).is_err());
        let mut bad = rows;
        bad[1].alpha = 4.0;
        assert!(DhTable::new(&bad).is_err());
        bad = rows;
        bad[0].d = f64::NAN;
        assert!(DhTable::new(&bad).is_err());
    }

    #[test]
    fn robot_file_round_trip_and_overrides() {
        let robot = Robot::panda();
        let text = robot.to_key_values_text();
        let back = Robot::from_key_values(&KeyValues::parse(&text).unwrap()).unwrap();
        assert_eq!(back, robot);

        let kv = KeyValues::parse("dh.6.a = 0.1\nlimit.0.min = -1.5").unwrap();
        let custom = Robot::from_key_values(&kv).unwrap();
        assert_eq!(custom.table.rows()[6].a, 0.1);
        assert_eq!(custom.limits.min[0], -1.5);
    }

    #[test]
    fn robot_file_rejects_unknown_keys() {
        for text in [
            "dh.7.d = 0",
            "dh.0.q = 1",
            "limits.0.min = 1",
            "gripper = 2",
        ] {
            assert!(
                Robot::from_key_values(&KeyValues::parse(text).unwrap()).is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn mask_bookkeeping() {
        let mask = JointMask::single(2).unwrap();
        assert!(mask.is_locked(2));
        assert_eq!(mask.unlocked_count(), 6);
        assert_eq!(mask.unlocked().collect::<Vec<_>>(), vec![0, 1, 3, 4, 5, 6]);
        assert!(JointMask::single(7).is_err());
        assert_eq!(JointMask::all().unlocked_count(), 0);
    }
}
