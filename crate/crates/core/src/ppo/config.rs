use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::faults::{ScenarioSampler, CONTROLLED_JOINTS, DEFAULT_P_FUNCTIONAL};
use crate::keyvalue::KeyValues;
use crate::nn::HIDDEN_SIZES;

/// Which fault scenarios training episodes draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainScenarios {
    /// Uniform over no fault, permanently broken and intermittent.
    Mixed,
    /// Every episode fault-free.
    NoFault,
}

impl std::str::FromStr for TrainScenarios {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(TrainScenarios::Mixed),
            "no_fault" => Ok(TrainScenarios::NoFault),
            other => Err(Error::config(format!(
                "train_scenarios must be mixed or no_fault, got {:?}",
                other
            ))),
        }
    }
}

impl std::fmt::Display for TrainScenarios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainScenarios::Mixed => "mixed",
            TrainScenarios::NoFault => "no_fault",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    /// Value-loss coefficient.
    pub c1: f64,
    /// Entropy coefficient.
    pub c2: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub steps_per_rollout: usize,
    pub num_envs: usize,
    pub total_episodes: usize,
    pub seed: u64,
    /// Write a checkpoint every this many updates; 0 writes only at the end.
    pub checkpoint_every: usize,
    /// Gradient norm bound per network; 0 disables clipping.
    pub max_grad_norm: f64,
    /// Treat success like truncation and bootstrap from the final state,
    /// instead of ending the return there.
    pub bootstrap_on_success: bool,
    pub train_scenarios: TrainScenarios,
    pub train_fault_joints: Vec<usize>,
    pub p_functional: f64,
    pub hidden_sizes: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lam: 0.95,
            clip_eps: 0.2,
            c1: 0.5,
            c2: 0.01,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            epochs_per_update: 5,
            minibatch_size: 1024,
            steps_per_rollout: 64,
            num_envs: 32,
            total_episodes: 8000,
            seed: 0,
            checkpoint_every: 50,
            max_grad_norm: 0.5,
            bootstrap_on_success: true,
            train_scenarios: TrainScenarios::Mixed,
            train_fault_joints: (0..7).collect(),
            p_functional: DEFAULT_P_FUNCTIONAL,
            hidden_sizes: HIDDEN_SIZES.to_vec(),
        }
    }
}

/// Every key accepted in the training section of a config file.
pub const PPO_KEYS: &[&str] = &[
    "gamma",
    "lam",
    "clip_eps",
    "c1",
    "c2",
    "lr_actor",
    "lr_critic",
    "epochs_per_update",
    "minibatch_size",
    "steps_per_rollout",
    "num_envs",
    "total_episodes",
    "seed",
    "checkpoint_every",
    "max_grad_norm",
    "bootstrap_on_success",
    "train_scenarios",
    "train_fault_joints",
    "p_functional",
    "hidden_sizes",
];

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::config(format!("{}: bad entry {:?}", key, s)))
        })
        .collect()
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lam) {
            return Err(Error::config("gamma and lam must lie in [0, 1]"));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps.is_finite()) {
            return Err(Error::config("clip_eps must be positive"));
        }
        // A zero learning rate is allowed so updates can be checked for
        // leaving parameters untouched.
        for (name, v) in [
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("c1", self.c1),
            ("c2", self.c2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!(
                    "{} must be finite and non-negative",
                    name
                )));
            }
        }
        if !(self.max_grad_norm.is_finite() && self.max_grad_norm >= 0.0) {
            return Err(Error::config(
                "max_grad_norm must be finite and non-negative",
            ));
        }
        for (name, v) in [
            ("epochs_per_update", self.epochs_per_update),
            ("minibatch_size", self.minibatch_size),
            ("steps_per_rollout", self.steps_per_rollout),
            ("num_envs", self.num_envs),
            ("total_episodes", self.total_episodes),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{} must be at least 1", name)));
            }
        }
        if let Some(&j) = self
            .train_fault_joints
            .iter()
            .find(|&&j| j >= CONTROLLED_JOINTS)
        {
            return Err(Error::JointIndex {
                index: j,
                count: CONTROLLED_JOINTS,
            });
        }
        if !(0.0..=1.0).contains(&self.p_functional) {
            return Err(Error::config("p_functional must lie in [0, 1]"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        Ok(())
    }

    pub fn sampler(&self) -> ScenarioSampler {
        let joints = match self.train_scenarios {
            TrainScenarios::Mixed => self.train_fault_joints.clone(),
            TrainScenarios::NoFault => Vec::new(),
        };
        ScenarioSampler {
            joints,
            p_functional: self.p_functional,
        }
    }

    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.read_into("gamma", &mut self.gamma)?;
        kv.read_into("lam", &mut self.lam)?;
        kv.read_into("clip_eps", &mut self.clip_eps)?;
        kv.read_into("c1", &mut self.c1)?;
        kv.read_into("c2", &mut self.c2)?;
        kv.read_into("lr_actor", &mut self.lr_actor)?;
        kv.read_into("lr_critic", &mut self.lr_critic)?;
        kv.read_into("epochs_per_update", &mut self.epochs_per_update)?;
        kv.read_into("minibatch_size", &mut self.minibatch_size)?;
        kv.read_into("steps_per_rollout", &mut self.steps_per_rollout)?;
        kv.read_into("num_envs", &mut self.num_envs)?;
        kv.read_into("total_episodes", &mut self.total_episodes)?;
        kv.read_into("seed", &mut self.seed)?;
        kv.read_into("checkpoint_every", &mut self.checkpoint_every)?;
        kv.read_into("max_grad_norm", &mut self.max_grad_norm)?;
        kv.read_into("bootstrap_on_success", &mut self.bootstrap_on_success)?;
        kv.read_into("train_scenarios", &mut self.train_scenarios)?;
        if let Some(v) = kv.get("train_fault_joints") {
            self.train_fault_joints = parse_list("train_fault_joints", v)?;
        }
        kv.read_into("p_functional", &mut self.p_functional)?;
        if let Some(v) = kv.get("hidden_sizes") {
            self.hidden_sizes = parse_list("hidden_sizes", v)?;
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(|k| PPO_KEYS.contains(&k))?;
        let mut cfg = PpoConfig::default();
        cfg.apply(kv)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write_key_values(&self, out: &mut String) {
        let _ = writeln!(out, "# training");
        let _ = writeln!(out, "gamma = {}", self.gamma);
        let _ = writeln!(out, "lam = {}", self.lam);
        let _ = writeln!(out, "clip_eps = {}", self.clip_eps);
        let _ = writeln!(out, "c1 = {}", self.c1);
        let _ = writeln!(out, "c2 = {}", self.c2);
        let _ = writeln!(out, "lr_actor = {}", self.lr_actor);
        let _ = writeln!(out, "lr_critic = {}", self.lr_critic);
        let _ = writeln!(out, "epochs_per_update = {}", self.epochs_per_update);
        let _ = writeln!(out, "minibatch_size = {}", self.minibatch_size);
        let _ = writeln!(out, "steps_per_rollout = {}", self.steps_per_rollout);
        let _ = writeln!(out, "num_envs = {}", self.num_envs);
        let _ = writeln!(out, "total_episodes = {}", self.total_episodes);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "checkpoint_every = {}", self.checkpoint_every);
        let _ = writeln!(out, "max_grad_norm = {}", self.max_grad_norm);
        let _ = writeln!(out, "bootstrap_on_success = {}", self.bootstrap_on_success);
        let _ = writeln!(out, "train_scenarios = {}", self.train_scenarios);
        let _ = writeln!(
            out,
            "train_fault_joints = {}",
            join(&self.train_fault_joints)
        );
        let _ = writeln!(out, "p_functional = {}", self.p_functional);
        let _ = writeln!(out, "hidden_sizes = {}", join(&self.hidden_sizes));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PpoConfig::default();
        cfg.validate().unwrap();
        let mut text = String::new();
        cfg.write_key_values(&mut text);
        assert_eq!(
            PpoConfig::from_key_values(&KeyValues::parse(&text).unwrap()).unwrap(),
            cfg
        );
    }

    #[test]
    fn invalid_values() {
        for text in [
            "gamma = 1.5",
            "lam = -0.1",
            "clip_eps = 0",
            "lr_actor = -1",
            "num_envs = 0",
            "train_fault_joints = 1,9",
            "train_scenarios = chaos",
            "hidden_sizes = 64,0",
            "bootstrap_on_success = maybe",
        ] {
            assert!(
                PpoConfig::from_key_values(&KeyValues::parse(text).unwrap()).is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn no_fault_sampler_has_no_joints() {
        let cfg = PpoConfig {
            train_scenarios: TrainScenarios::NoFault,
            ..Default::default()
        };
        assert!(cfg.sampler().joints.is_empty());
    }
}
