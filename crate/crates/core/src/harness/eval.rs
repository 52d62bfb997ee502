use std::io::Write;

use crate::environment::{Action, DrawerEnv, EnvConfig, Observation, ACTION_DIM};
use crate::error::Result;
use crate::faults::FaultScenario;
use crate::nn::GaussianPolicy;

/// Anything that maps observations to actions during evaluation.
pub trait Controller {
    /// Called before every episode.
    fn reset(&mut self) {}
    fn act(&mut self, obs: &Observation, step: usize) -> Result<Action>;
}

/// Acts with the policy mean; no exploration noise.
pub struct MeanPolicy<'a>(pub &'a GaussianPolicy);

impl Controller for MeanPolicy<'_> {
    fn act(&mut self, obs: &Observation, _step: usize) -> Result<Action> {
        let mean = self.0.mean(&obs.0)?;
        let mut a = [0.0; ACTION_DIM];
        for (dst, m) in a.iter_mut().zip(&mean) {
            *dst = m.clamp(-1.0, 1.0);
        }
        Ok(Action(a))
    }
}

/// Replays a fixed action sequence, holding the last action afterwards.
pub struct Replay(pub Vec<Action>);

impl Controller for Replay {
    fn act(&mut self, _obs: &Observation, step: usize) -> Result<Action> {
        Ok(self
            .0
            .get(step)
            .or(self.0.last())
            .copied()
            .unwrap_or(Action([0.0; ACTION_DIM])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub success: bool,
    pub steps: usize,
    /// Seconds until the success threshold was crossed.
    pub completion_time: Option<f64>,
    pub reward_total: f64,
    pub drawer_pos: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenario: FaultScenario,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean over successful episodes only.
    pub mean_completion_time: Option<f64>,
    pub mean_reward: f64,
    pub rows: Vec<EpisodeOutcome>,
}

impl EvalReport {
    pub fn from_rows(scenario: FaultScenario, rows: Vec<EpisodeOutcome>) -> EvalReport {
        let episodes = rows.len();
        let successes = rows.iter().filter(|r| r.success).count();
        let times: Vec<f64> = rows.iter().filter_map(|r| r.completion_time).collect();
        let n = episodes.max(1) as f64;
        EvalReport {
            scenario,
            episodes,
            successes,
            success_rate: successes as f64 / n,
            mean_completion_time: (!times.is_empty())
                .then(|| times.iter().sum::<f64>() / times.len() as f64),
            mean_reward: rows.iter().map(|r| r.reward_total).sum::<f64>() / n,
            rows,
        }
    }
}

/// Runs one episode per seed `seed, seed + 1, ...` under `scenario`.
pub fn evaluate(
    controller: &mut dyn Controller,
    env_config: &EnvConfig,
    scenario: FaultScenario,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(crate::Error::Config(
            "evaluation needs at least one episode".into(),
        ));
    }
    let config = EnvConfig {
        fault: scenario,
        ..env_config.clone()
    };
    let (mut env, _) = DrawerEnv::new(config, seed)?;
    let mut rows = Vec::with_capacity(episodes);
    for k in 0..episodes as u64 {
        let episode_seed = seed + k;
        let mut obs = env.reset(episode_seed)?;
        controller.reset();
        let mut reward_total = 0.0;
        let mut step = 0;
        loop {
            let action = controller.act(&obs, step)?;
            let r = env.step(&action)?;
            reward_total += r.reward.total;
            step += 1;
            obs = r.observation;
            if r.done {
                rows.push(EpisodeOutcome {
                    seed: episode_seed,
                    success: r.success,
                    steps: step,
                    completion_time: r.success.then_some(r.info.time),
                    reward_total,
                    drawer_pos: env.state.drawer_pos,
                });
                break;
            }
        }
    }
    Ok(EvalReport::from_rows(scenario, rows))
}

pub const EVAL_EPISODES_HEADER: &str =
    "scenario,joint,episode,seed,success,steps,completion_time_s,reward_total,drawer_pos";

pub fn write_episode_rows<W: Write>(out: &mut W, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(out, "{}", EVAL_EPISODES_HEADER)?;
    for rep in reports {
        let joint = rep
            .scenario
            .joint()
            .map(|j| j.to_string())
            .unwrap_or_default();
        for (i, r) in rep.rows.iter().enumerate() {
            let time = r.completion_time.map(|t| t.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                rep.scenario.label(),
                joint,
                i,
                r.seed,
                u8::from(r.success),
                r.steps,
                time,
                r.reward_total,
                r.drawer_pos
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{reset, step};
    use crate::kinematics::{
        jacobian_from_frames, pseudo_inverse, ChainFrames, JointMask, JointVector,
    };
    use nalgebra::Vector3;

    #[test]
    fn untrained_policy_rarely_succeeds() {
        let policy = GaussianPolicy::new(23, &[32, 32], 9, 0).unwrap();
        let cfg = EnvConfig {
            horizon: 60,
            ..Default::default()
        };
        let rep = evaluate(
            &mut MeanPolicy(&policy),
            &cfg,
            FaultScenario::NoFault,
            3,
            1000,
        )
        .unwrap();
        assert_eq!(rep.episodes, 3);
        assert_eq!(rep.successes, 0);
        assert_eq!(rep.mean_completion_time, None);
        assert!(rep.rows.iter().all(|r| r.steps == 60));
        assert_eq!(
            rep.rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![1000, 1001, 1002]
        );
    }

    /// Position-only pseudo-inverse IK; orientation is left free.
    fn reach(cfg: &EnvConfig, q0: JointVector, target: Vector3<f64>) -> JointVector {
        let robot = &cfg.robot;
        let mut q = q0;
        for _ in 0..3000 {
            let frames = ChainFrames::compute(&robot.table, &q);
            let jac = jacobian_from_frames(&frames, &JointMask::none()).unwrap();
            let e = target - frames.end_effector().translation;
            let dq = pseudo_inverse(&jac.entries.rows(0, 3).into_owned()) * e;
            for (k, &j) in jac.joints.iter().enumerate() {
                q.0[j] = robot.limits.clamp(j, q.0[j] + 0.05 * dq[k]);
            }
        }
        q
    }

    /// Moves to the handle with open fingers, closes them, then pulls along
    /// the opening axis, recording every action taken.
    fn scripted_opening(cfg: &EnvConfig) -> Vec<Action> {
        let handle = cfg.handle_position(0.0);
        let grasp = reach(cfg, cfg.robot.home(), handle);
        let mut plan = vec![(grasp, false), (grasp, true)];
        let mut q = grasp;
        for k in 1..=25 {
            q = reach(
                cfg,
                q,
                handle + cfg.drawer_axis_unit() * (0.25 * k as f64 / 25.0),
            );
            plan.push((q, true));
        }
        let (mut s, _) = reset(cfg, 0).unwrap();
        let mut actions = Vec::new();
        for (q, closed) in plan {
            let mut joints = [0.0; 9];
            joints[..7].copy_from_slice(&q.0);
            let finger = if closed {
                cfg.finger_min
            } else {
                cfg.finger_max
            };
            joints[7] = finger;
            joints[8] = finger;
            let a = Action::from_joints(&joints, cfg);
            loop {
                actions.push(a);
                step(&mut s, &a, cfg).unwrap();
                if s.done {
                    return actions;
                }
                if s.joints
                    .iter()
                    .zip(&joints)
                    .all(|(x, y)| (x - y).abs() < 1e-9)
                {
                    break;
                }
            }
        }
        panic!("scripted plan ended with the drawer at {}", s.drawer_pos);
    }

    #[test]
    fn replayed_opening_succeeds_every_time() {
        let cfg = EnvConfig::default();
        let actions = scripted_opening(&cfg);
        let rep = evaluate(
            &mut Replay(actions.clone()),
            &cfg,
            FaultScenario::NoFault,
            4,
            1000,
        )
        .unwrap();
        assert_eq!(rep.success_rate, 1.0, "{:?}", rep.rows[0]);
        let expected = actions.len() as f64 * cfg.dt;
        assert!((rep.mean_completion_time.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let policy = GaussianPolicy::new(23, &[16], 9, 4).unwrap();
        let cfg = EnvConfig {
            horizon: 30,
            ..Default::default()
        };
        let s = FaultScenario::Intermittent {
            joint: 2,
            p_functional: 0.5,
        };
        let a = evaluate(&mut MeanPolicy(&policy), &cfg, s, 3, 7).unwrap();
        let b = evaluate(&mut MeanPolicy(&policy), &cfg, s, 3, 7).unwrap();
        assert_eq!(a, b);
        let mut out = Vec::new();
        write_episode_rows(&mut out, &[a]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("intermittent,2,0,7,0,30,,"));
    }
}
