use std::fmt::Write as _;
use std::path::Path;

use crate::environment::{EnvConfig, ENV_KEYS};
use crate::error::{Error, Result};
use crate::faults::CONTROLLED_JOINTS;
use crate::keyvalue::KeyValues;
use crate::kinematics::{IkOptions, ARM_JOINTS};
use crate::ppo::{PpoConfig, PPO_KEYS};

use super::ik_demo::IkDemoConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Episode `k` of every scenario uses seed `seed + k`.
    pub seed: u64,
    /// Joint faulted by every non-trivial evaluation scenario (0-based).
    pub joint: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 50,
            seed: 1000,
            joint: 2,
        }
    }
}

/// Everything a CLI run reads from one config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub eval: EvalConfig,
    pub ik: IkDemoConfig,
    /// Joint held fixed in the second IK run; `None` skips it.
    pub ik_locked_joint: Option<usize>,
}

pub const HARNESS_KEYS: &[&str] = &[
    "eval_episodes",
    "eval_seed",
    "eval_joint",
    "ik_step",
    "ik_tolerance",
    "ik_max_iters",
    "ik_samples_per_leg",
    "ik_locked_joint",
];

impl RunConfig {
    pub fn reference() -> Self {
        RunConfig {
            ik_locked_joint: Some(2),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        if self.eval.episodes == 0 {
            return Err(Error::config("eval_episodes must be at least 1"));
        }
        if self.eval.joint >= CONTROLLED_JOINTS {
            return Err(Error::JointIndex {
                index: self.eval.joint,
                count: CONTROLLED_JOINTS,
            });
        }
        let o = &self.ik.options;
        if !(o.step > 0.0 && o.step.is_finite()) || !(o.tolerance > 0.0 && o.tolerance.is_finite())
        {
            return Err(Error::config("ik_step and ik_tolerance must be positive"));
        }
        if self.ik.samples_per_leg == 0 {
            return Err(Error::config("ik_samples_per_leg must be at least 1"));
        }
        if let Some(j) = self.ik_locked_joint.filter(|&j| j >= ARM_JOINTS) {
            return Err(Error::JointIndex {
                index: j,
                count: ARM_JOINTS,
            });
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(|k| {
            ENV_KEYS.contains(&k) || PPO_KEYS.contains(&k) || HARNESS_KEYS.contains(&k)
        })?;
        let mut cfg = RunConfig::reference();
        cfg.env.apply(kv)?;
        cfg.ppo.apply(kv)?;
        kv.read_into("eval_episodes", &mut cfg.eval.episodes)?;
        kv.read_into("eval_seed", &mut cfg.eval.seed)?;
        kv.read_into("eval_joint", &mut cfg.eval.joint)?;
        let o: &mut IkOptions = &mut cfg.ik.options;
        kv.read_into("ik_step", &mut o.step)?;
        kv.read_into("ik_tolerance", &mut o.tolerance)?;
        kv.read_into("ik_max_iters", &mut o.max_iters)?;
        kv.read_into("ik_samples_per_leg", &mut cfg.ik.samples_per_leg)?;
        if let Some(v) = kv.get("ik_locked_joint") {
            cfg.ik_locked_joint =
                match v {
                    "" | "none" => None,
                    s => Some(s.parse().map_err(|_| {
                        Error::config(format!("ik_locked_joint: bad value {:?}", s))
                    })?),
                };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    /// Full config text; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.env.write_key_values(&mut out);
        out.push('\n');
        self.ppo.write_key_values(&mut out);
        out.push('\n');
        let _ = writeln!(out, "# evaluation");
        let _ = writeln!(out, "eval_episodes = {}", self.eval.episodes);
        let _ = writeln!(out, "eval_seed = {}", self.eval.seed);
        let _ = writeln!(out, "eval_joint = {}", self.eval.joint);
        out.push('\n');
        let _ = writeln!(out, "# inverse kinematics demo");
        let _ = writeln!(out, "ik_step = {}", self.ik.options.step);
        let _ = writeln!(out, "ik_tolerance = {}", self.ik.options.tolerance);
        let _ = writeln!(out, "ik_max_iters = {}", self.ik.options.max_iters);
        let _ = writeln!(out, "ik_samples_per_leg = {}", self.ik.samples_per_leg);
        let locked = self
            .ik_locked_joint
            .map(|j| j.to_string())
            .unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "ik_locked_joint = {}", locked);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips() {
        let cfg = RunConfig::reference();
        cfg.validate().unwrap();
        let back = RunConfig::from_key_values(&KeyValues::parse(&cfg.to_text()).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_file_is_reference() {
        assert_eq!(
            RunConfig::from_key_values(&KeyValues::default()).unwrap(),
            RunConfig::reference()
        );
    }

    #[test]
    fn sections_share_one_namespace() {
        let kv =
            KeyValues::parse("horizon = 100\nnum_envs = 4\neval_joint = 5\nik_locked_joint = none")
                .unwrap();
        let cfg = RunConfig::from_key_values(&kv).unwrap();
        assert_eq!(cfg.env.horizon, 100);
        assert_eq!(cfg.ppo.num_envs, 4);
        assert_eq!(cfg.eval.joint, 5);
        assert_eq!(cfg.ik_locked_joint, None);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "eval_episodes = 0",
            "eval_joint = 9",
            "ik_locked_joint = 7",
            "ik_step = 0",
            "horizon = 0",
        ] {
            assert!(
                RunConfig::from_key_values(&KeyValues::parse(text).unwrap()).is_err(),
                "{text}"
            );
        }
    }
}
