use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::advantage::{
    clipped_term, clipped_term_grad, compute_gae, normalize, prob_ratio, total_loss, value_loss,
    StepEnd,
};
use super::config::PpoConfig;
use crate::environment::{
    Action, DrawerEnv, EnvConfig, Observation, RewardBreakdown, ACTION_DIM, OBS_DIM,
};
use crate::error::{Error, Result};
use crate::faults::{FaultScenario, ScenarioSampler};
use crate::nn::{
    clip_global_norm, Checkpoint, GaussianPolicy, MlpGrads, Optimizer, OptimizerKind, PolicyGrads,
    ValueNet,
};

/// Transitions from `num_envs` environments over `steps` steps, stored
/// time-major: sample `t * num_envs + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub num_envs: usize,
    pub steps: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub ends: Vec<StepEnd>,
    /// Value of each environment's observation after the last step.
    pub last_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(num_envs: usize, steps: usize) -> Self {
        let n = num_envs * steps;
        RolloutBuffer {
            num_envs,
            steps,
            observations: Vec::with_capacity(n * OBS_DIM),
            actions: Vec::with_capacity(n * ACTION_DIM),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            ends: Vec::with_capacity(n),
            last_values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Advantages and value targets in buffer order, computed per
    /// environment.
    pub fn advantages(&self, gamma: f64, lam: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (n, t_max) = (self.num_envs, self.steps);
        if self.len() != n * t_max || self.last_values.len() != n {
            return Err(Error::Dimension {
                expected: n * t_max,
                got: self.len(),
            });
        }
        let mut adv = vec![0.0; n * t_max];
        let mut ret = vec![0.0; n * t_max];
        for e in 0..n {
            let idx = |t: usize| t * n + e;
            let rewards: Vec<f64> = (0..t_max).map(|t| self.rewards[idx(t)]).collect();
            let mut values: Vec<f64> = (0..t_max).map(|t| self.values[idx(t)]).collect();
            values.push(self.last_values[e]);
            let ends: Vec<StepEnd> = (0..t_max).map(|t| self.ends[idx(t)]).collect();
            let est = compute_gae(&rewards, &values, &ends, gamma, lam);
            for t in 0..t_max {
                adv[idx(t)] = est.advantages[t];
                ret[idx(t)] = est.returns[t];
            }
        }
        Ok((adv, ret))
    }
}

/// Per-episode totals for the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub scenario: FaultScenario,
    pub reward: RewardBreakdown,
    pub success: bool,
    pub steps: usize,
}

pub const TRAIN_LOG_HEADER: &str =
    "episode,scenario,joint,reward_total,r_dist,r_rot,r_handle,r_open,success,steps";

impl EpisodeRecord {
    pub fn csv_row(&self) -> String {
        let r = &self.reward;
        let joint = self
            .scenario
            .joint()
            .map(|j| j.to_string())
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.scenario.label(),
            joint,
            r.total,
            r.r_dist,
            r.r_rot,
            r.r_handle,
            r.r_open,
            u8::from(self.success),
            self.steps
        )
    }
}

#[derive(Debug, Clone)]
struct Worker {
    env: DrawerEnv,
    rng: ChaCha8Rng,
    obs: Observation,
    sums: RewardBreakdown,
}

impl Worker {
    fn start_episode(&mut self, sampler: &ScenarioSampler) -> Result<()> {
        self.env.config.fault = sampler.sample(&mut self.rng);
        let seed: u64 = self.rng.random();
        self.obs = self.env.reset(seed)?;
        self.sums = RewardBreakdown::default();
        Ok(())
    }
}

fn add_rewards(acc: &mut RewardBreakdown, r: &RewardBreakdown) {
    acc.total += r.total;
    acc.r_dist += r.r_dist;
    acc.r_rot += r.r_rot;
    acc.r_handle += r.r_handle;
    acc.r_open += r.r_open;
}

/// Losses and diagnostics of one minibatch, evaluated before its step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub l_clip: f64,
    pub l_value: f64,
    pub entropy: f64,
    /// Ascended objective `l_clip - c1 l_value + c2 entropy`.
    pub total: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// One minibatch, gathered contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub observations: Vec<f64>,
    pub actions: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Loss terms and the gradients of the descent objective (the negated
/// total) with respect to actor and critic parameters. Advantages are used
/// as given.
pub fn minibatch_gradients(
    actor: &GaussianPolicy,
    critic: &ValueNet,
    mb: &Minibatch,
    config: &PpoConfig,
) -> Result<(LossBreakdown, PolicyGrads, MlpGrads)> {
    let b = mb.len();
    if b == 0 {
        return Err(Error::EmptyBuffer);
    }
    let inv_b = 1.0 / b as f64;
    let (log_probs, tape) = actor.log_prob_batch(&mb.observations, &mb.actions, b)?;
    let value_tape = critic.net.forward_tape(&mb.observations, b)?;
    let values = value_tape.output();

    let mut l = LossBreakdown::default();
    let mut d_log_prob = vec![0.0; b];
    let mut clipped = 0usize;
    for i in 0..b {
        let r = prob_ratio(log_probs[i], mb.old_log_probs[i]);
        let a = mb.advantages[i];
        l.l_clip += clipped_term(r, a, config.clip_eps) * inv_b;
        l.mean_ratio += r * inv_b;
        l.approx_kl += (mb.old_log_probs[i] - log_probs[i]) * inv_b;
        if (r - 1.0).abs() > config.clip_eps {
            clipped += 1;
        }
        d_log_prob[i] =
            -clipped_term_grad(log_probs[i], mb.old_log_probs[i], a, config.clip_eps) * inv_b;
    }
    l.clip_fraction = clipped as f64 * inv_b;
    l.l_value = value_loss(values, &mb.returns);
    l.entropy = actor.entropy();
    l.total = total_loss(l.l_clip, l.l_value, l.entropy, config.c1, config.c2);

    let mut actor_grads = PolicyGrads::zeros_like(actor);
    actor.backward(
        &tape,
        &mb.actions,
        &d_log_prob,
        -config.c2,
        &mut actor_grads,
    )?;
    let d_values: Vec<f64> = values
        .iter()
        .zip(&mb.returns)
        .map(|(v, r)| config.c1 * 2.0 * (v - r) * inv_b)
        .collect();
    let mut critic_grads = MlpGrads::zeros_like(&critic.net);
    critic
        .net
        .backward(&value_tape, &d_values, &mut critic_grads)?;
    Ok((l, actor_grads, critic_grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub minibatches: usize,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub l_clip: f64,
    pub l_value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub actor_grad_norm: f64,
    pub critic_grad_norm: f64,
    /// Mean ratio and clip fraction of the very first minibatch.
    pub first_mean_ratio: f64,
    pub first_clip_fraction: f64,
}

/// Adam state for both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub actor: Optimizer,
    pub critic: Optimizer,
}

impl Optimizers {
    pub fn new(kind: OptimizerKind, actor: &GaussianPolicy, critic: &ValueNet) -> Self {
        Optimizers {
            actor: Optimizer::for_params(kind, &actor.params()),
            critic: Optimizer::for_params(kind, &critic.net.params()),
        }
    }
}

/// Several epochs of shuffled minibatch steps over one rollout.
pub fn update<R: Rng + ?Sized>(
    actor: &mut GaussianPolicy,
    critic: &mut ValueNet,
    opts: &mut Optimizers,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let (advantages, returns) = buffer.advantages(config.gamma, config.lam)?;
    let n = buffer.len();
    let mb_size = config.minibatch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();

    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(mb_size) {
            let mut mb = Minibatch {
                observations: Vec::with_capacity(chunk.len() * OBS_DIM),
                actions: Vec::with_capacity(chunk.len() * ACTION_DIM),
                old_log_probs: Vec::with_capacity(chunk.len()),
                advantages: Vec::with_capacity(chunk.len()),
                returns: Vec::with_capacity(chunk.len()),
            };
            for &i in chunk {
                mb.observations
                    .extend_from_slice(&buffer.observations[i * OBS_DIM..(i + 1) * OBS_DIM]);
                mb.actions
                    .extend_from_slice(&buffer.actions[i * ACTION_DIM..(i + 1) * ACTION_DIM]);
                mb.old_log_probs.push(buffer.log_probs[i]);
                mb.advantages.push(advantages[i]);
                mb.returns.push(returns[i]);
            }
            mb.advantages = normalize(&mb.advantages);

            let (loss, mut ga, mut gc) = minibatch_gradients(actor, critic, &mb, config)?;
            if !(loss.total.is_finite() && loss.l_value.is_finite()) {
                return Err(Error::NonFinite("loss"));
            }
            let (na, nc) = if config.max_grad_norm > 0.0 {
                (
                    clip_global_norm(&mut ga.slices_mut(), config.max_grad_norm),
                    clip_global_norm(&mut gc.slices_mut(), config.max_grad_norm),
                )
            } else {
                (
                    crate::nn::global_norm(&ga.slices()),
                    crate::nn::global_norm(&gc.slices()),
                )
            };
            if !(na.is_finite() && nc.is_finite()) {
                return Err(Error::NonFinite("gradient"));
            }
            opts.actor
                .step(&mut actor.params_mut(), &ga.slices(), config.lr_actor)?;
            opts.critic
                .step(&mut critic.net.params_mut(), &gc.slices(), config.lr_critic)?;
            actor.clamp_log_std();

            if stats.minibatches == 0 {
                stats.first_mean_ratio = loss.mean_ratio;
                stats.first_clip_fraction = loss.clip_fraction;
            }
            stats.minibatches += 1;
            stats.mean_ratio += loss.mean_ratio;
            stats.clip_fraction += loss.clip_fraction;
            stats.l_clip += loss.l_clip;
            stats.l_value += loss.l_value;
            stats.entropy += loss.entropy;
            stats.approx_kl += loss.approx_kl;
            stats.actor_grad_norm += na;
            stats.critic_grad_norm += nc;
        }
    }
    let k = stats.minibatches.max(1) as f64;
    stats.mean_ratio /= k;
    stats.clip_fraction /= k;
    stats.l_clip /= k;
    stats.l_value /= k;
    stats.entropy /= k;
    stats.approx_kl /= k;
    stats.actor_grad_norm /= k;
    stats.critic_grad_norm /= k;
    Ok(stats)
}

/// Progress snapshot handed to the caller after every update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub updates: usize,
    pub episodes: usize,
    pub recent_reward: f64,
    pub recent_success: f64,
    pub stats: UpdateStats,
}

/// Actor, critic, optimizers and the vectorized environments of one run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub env_config: EnvConfig,
    pub config: PpoConfig,
    pub actor: GaussianPolicy,
    pub critic: ValueNet,
    pub optimizers: Optimizers,
    pub episodes_done: usize,
    pub updates_done: usize,
    sampler: ScenarioSampler,
    workers: Vec<Worker>,
    shuffle_rng: ChaCha8Rng,
}

/// Distinct streams of one seed: 0 shuffles minibatches, `1 + e` drives
/// environment `e`.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Trainer {
    pub fn new(env_config: EnvConfig, config: PpoConfig) -> Result<Trainer> {
        env_config.validate()?;
        config.validate()?;
        let actor = GaussianPolicy::new(OBS_DIM, &config.hidden_sizes, ACTION_DIM, config.seed)?;
        let critic = ValueNet::new(OBS_DIM, &config.hidden_sizes, config.seed ^ 0x5eed_c417)?;
        let optimizers = Optimizers::new(OptimizerKind::default(), &actor, &critic);
        let sampler = config.sampler();
        let mut workers = Vec::with_capacity(config.num_envs);
        for e in 0..config.num_envs {
            let (env, obs) = DrawerEnv::new(env_config.clone(), 0)?;
            let mut w = Worker {
                env,
                rng: stream_rng(config.seed, 1 + e as u64),
                obs,
                sums: RewardBreakdown::default(),
            };
            w.start_episode(&sampler)?;
            workers.push(w);
        }
        Ok(Trainer {
            shuffle_rng: stream_rng(config.seed, 0),
            env_config,
            config,
            actor,
            critic,
            optimizers,
            episodes_done: 0,
            updates_done: 0,
            sampler,
            workers,
        })
    }

    /// Runs every environment for `steps_per_rollout` steps with sampled
    /// actions, reporting each finished episode to `on_episode`.
    pub fn collect(&mut self, on_episode: &mut dyn FnMut(&EpisodeRecord)) -> Result<RolloutBuffer> {
        let n = self.workers.len();
        let t_max = self.config.steps_per_rollout;
        let mut buf = RolloutBuffer::new(n, t_max);
        let mut obs_batch = vec![0.0; n * OBS_DIM];
        for _ in 0..t_max {
            for (e, w) in self.workers.iter().enumerate() {
                obs_batch[e * OBS_DIM..(e + 1) * OBS_DIM].copy_from_slice(&w.obs.0);
            }
            let means = self.actor.mean_batch(&obs_batch, n)?;
            let values = self.critic.values(&obs_batch, n)?;
            for (e, w) in self.workers.iter_mut().enumerate() {
                let (raw, log_prob) = self
                    .actor
                    .sample_from_mean(&means[e * ACTION_DIM..(e + 1) * ACTION_DIM], &mut w.rng);
                let mut act = [0.0; ACTION_DIM];
                for (a, r) in act.iter_mut().zip(&raw) {
                    *a = r.clamp(-1.0, 1.0);
                }
                let result = w.env.step(&Action(act))?;
                add_rewards(&mut w.sums, &result.reward);

                buf.observations.extend_from_slice(&w.obs.0);
                buf.actions.extend_from_slice(&raw);
                buf.log_probs.push(log_prob);
                buf.rewards.push(result.reward.total);
                buf.values.push(values[e]);

                let end = if !result.done {
                    StepEnd::Continue
                } else if result.success && !self.config.bootstrap_on_success {
                    StepEnd::Terminal
                } else {
                    StepEnd::Truncated {
                        bootstrap: self.critic.value(&result.observation.0)?,
                    }
                };
                buf.ends.push(end);

                if result.done {
                    self.episodes_done += 1;
                    on_episode(&EpisodeRecord {
                        episode: self.episodes_done,
                        scenario: w.env.config.fault,
                        reward: w.sums,
                        success: result.success,
                        steps: result.info.step_index,
                    });
                    w.start_episode(&self.sampler)?;
                } else {
                    w.obs = result.observation;
                }
            }
        }
        for (e, w) in self.workers.iter().enumerate() {
            obs_batch[e * OBS_DIM..(e + 1) * OBS_DIM].copy_from_slice(&w.obs.0);
        }
        buf.last_values = self.critic.values(&obs_batch, n)?;
        Ok(buf)
    }

    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateStats> {
        let stats = update(
            &mut self.actor,
            &mut self.critic,
            &mut self.optimizers,
            buffer,
            &self.config,
            &mut self.shuffle_rng,
        )?;
        self.updates_done += 1;
        Ok(stats)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            actor: self.actor.clone(),
            critic: Some(self.critic.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub checkpoint: Checkpoint,
    pub episodes: Vec<EpisodeRecord>,
    pub updates: usize,
    pub last_stats: UpdateStats,
}

/// Collect/update cycles until `total_episodes` episodes have finished.
/// Episodes that finish inside the last rollout are kept, so slightly more
/// than `total_episodes` may be recorded.
pub fn train(
    env_config: &EnvConfig,
    config: &PpoConfig,
    checkpoint_path: Option<&Path>,
    mut log: Option<&mut dyn Write>,
    progress: &mut dyn FnMut(&Progress),
) -> Result<TrainSummary> {
    let mut trainer = Trainer::new(env_config.clone(), config.clone())?;
    if let Some(path) = checkpoint_path {
        // Fail on an unwritable path before spending any time training.
        trainer.checkpoint().save(path)?;
    }
    if let Some(out) = log.as_mut() {
        writeln!(out, "{}", TRAIN_LOG_HEADER)?;
    }
    let mut episodes: Vec<EpisodeRecord> = Vec::new();
    let mut last_stats = UpdateStats::default();
    while trainer.episodes_done < config.total_episodes {
        let mut io_err: Option<std::io::Error> = None;
        let buffer = trainer.collect(&mut |rec| {
            if let Some(out) = log.as_mut() {
                if let Err(e) = writeln!(out, "{}", rec.csv_row()) {
                    io_err.get_or_insert(e);
                }
            }
            episodes.push(*rec);
        })?;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        last_stats = trainer.update(&buffer)?;
        if let Some(path) = checkpoint_path {
            if config.checkpoint_every > 0 && trainer.updates_done % config.checkpoint_every == 0 {
                trainer.checkpoint().save(path)?;
            }
        }
        let recent = &episodes[episodes.len().saturating_sub(100)..];
        let k = recent.len().max(1) as f64;
        progress(&Progress {
            updates: trainer.updates_done,
            episodes: trainer.episodes_done,
            recent_reward: recent.iter().map(|r| r.reward.total).sum::<f64>() / k,
            recent_success: recent.iter().filter(|r| r.success).count() as f64 / k,
            stats: last_stats,
        });
    }
    if let Some(out) = log.as_mut() {
        out.flush()?;
    }
    let checkpoint = trainer.checkpoint();
    if let Some(path) = checkpoint_path {
        checkpoint.save(path)?;
    }
    Ok(TrainSummary {
        checkpoint,
        episodes,
        updates: trainer.updates_done,
        last_stats,
    })
}
