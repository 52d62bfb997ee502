//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use ftarm::ppo::StepEnd;

pub type M4 = [[f64; 4]; 4];

/// (d, a, alpha, theta_home) typed in from the published Panda table.
pub const PANDA: [(f64, f64, f64, f64); 7] = [
    (0.333, 0.0, 0.0, 1.157),
    (0.0, 0.0, -FRAC_PI_2, -1.066),
    (0.316, 0.0, FRAC_PI_2, -0.155),
    (0.0, 0.0825, FRAC_PI_2, -2.239),
    (0.384, -0.0825, -FRAC_PI_2, -1.841),
    (0.0, 0.0, FRAC_PI_2, 1.003),
    (0.0, 0.088, 0.0, 0.469),
];

pub const PANDA_MIN: [f64; 7] = [
    -2.8973, -1.7628, -2.8973, -3.0718, -2.8973, -0.0175, -2.8973,
];
pub const PANDA_MAX: [f64; 7] = [2.8973, 1.7628, 2.8973, -0.0698, 2.8973, 3.7525, 2.8973];

pub fn link(d: f64, a: f64, alpha: f64, theta: f64) -> M4 {
    let (ct, st, ca, sa) = (theta.cos(), theta.sin(), alpha.cos(), alpha.sin());
    [
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn mul(x: &M4, y: &M4) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    out
}

/// Plain 4x4 matrix chain over the Panda rows.
pub fn oracle_fk(q: &[f64; 7]) -> M4 {
    let mut t = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for (i, &(d, a, alpha, _)) in PANDA.iter().enumerate() {
        t = mul(&t, &link(d, a, alpha, q[i]));
    }
    t
}

pub fn max_abs_diff(a: &M4, b: &M4) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `sum_k gamma^k r_{t+k}` up to the end of the episode, as an explicit
/// double loop.
pub fn returns_oracle(rewards: &[f64], ends: &[StepEnd], gamma: f64, last_value: f64) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut discount = 1.0;
            let mut k = t;
            loop {
                sum += discount * rewards[k];
                discount *= gamma;
                match ends[k] {
                    StepEnd::Terminal => break,
                    StepEnd::Truncated { bootstrap } => {
                        sum += discount * bootstrap;
                        break;
                    }
                    StepEnd::Continue if k + 1 == n => {
                        sum += discount * last_value;
                        break;
                    }
                    StepEnd::Continue => k += 1,
                }
            }
            sum
        })
        .collect()
}

/// `A_t = sum_l (gamma lam)^l delta_{t+l}` within the episode.
pub fn gae_oracle(
    rewards: &[f64],
    values: &[f64],
    ends: &[StepEnd],
    gamma: f64,
    lam: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let delta = |k: usize| {
        let next = match ends[k] {
            StepEnd::Terminal => 0.0,
            StepEnd::Truncated { bootstrap } => bootstrap,
            StepEnd::Continue => values[k + 1],
        };
        rewards[k] + gamma * next - values[k]
    };
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut k = t;
            loop {
                sum += (gamma * lam).powi((k - t) as i32) * delta(k);
                if ends[k].is_end() || k + 1 == n {
                    break;
                }
                k += 1;
            }
            sum
        })
        .collect()
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

use ftarm::nn::{GaussianPolicy, ValueNet};
use ftarm::ppo::{minibatch_gradients, Minibatch, PpoConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TINY_OBS: usize = 5;
pub const TINY_ACT: usize = 3;

/// Small actor, critic and minibatch with ratios spread around 1.
pub fn tiny_problem(seed: u64, batch: usize) -> (GaussianPolicy, ValueNet, Minibatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = GaussianPolicy::new(TINY_OBS, &[6, 4], TINY_ACT, seed).unwrap();
    // A larger output gain keeps the tanh away from its linear regime.
    for w in &mut actor.mean_net.layers.last_mut().unwrap().weights {
        *w *= 50.0;
    }
    for (i, ls) in actor.log_std.iter_mut().enumerate() {
        *ls = -0.3 - 0.2 * i as f64;
    }
    let mut critic = ValueNet::new(TINY_OBS, &[6, 4], seed + 1).unwrap();
    // Zero biases put samples with no active units exactly on a ReLU kink.
    for layer in actor
        .mean_net
        .layers
        .iter_mut()
        .chain(critic.net.layers.iter_mut())
    {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let observations: Vec<f64> = (0..batch * TINY_OBS)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let actions: Vec<f64> = (0..batch * TINY_ACT)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let (lps, _) = actor
        .log_prob_batch(&observations, &actions, batch)
        .unwrap();
    let old_log_probs = lps
        .iter()
        .map(|lp| lp + rng.random_range(-0.4..0.4))
        .collect();
    let mb = Minibatch {
        observations,
        actions,
        old_log_probs,
        advantages: (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect(),
        returns: (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect(),
    };
    (actor, critic, mb)
}

fn rel_ok(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-7
}

/// Central differences of the descent objective against every actor and
/// critic gradient entry. Returns the number of entries checked and the
/// ones outside 1e-4 relative.
pub fn check_loss_gradients(
    actor: &GaussianPolicy,
    critic: &ValueNet,
    mb: &Minibatch,
    config: &PpoConfig,
) -> (usize, Vec<String>) {
    let (_, ga, gc) = minibatch_gradients(actor, critic, mb, config).unwrap();
    let objective =
        |a: &GaussianPolicy, c: &ValueNet| -minibatch_gradients(a, c, mb, config).unwrap().0.total;
    let h = 1e-6;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (s, g) in ga.slices().iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = actor.clone();
            plus.params_mut()[s][i] += h;
            let mut minus = actor.clone();
            minus.params_mut()[s][i] -= h;
            let fd = (objective(&plus, critic) - objective(&minus, critic)) / (2.0 * h);
            if !rel_ok(g[i], fd) {
                failures.push(format!(
                    "actor slice {s} index {i}: analytic {} numeric {fd}",
                    g[i]
                ));
            }
            checked += 1;
        }
    }
    for (s, g) in gc.slices().iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = critic.clone();
            plus.net.params_mut()[s][i] += h;
            let mut minus = critic.clone();
            minus.net.params_mut()[s][i] -= h;
            let fd = (objective(actor, &plus) - objective(actor, &minus)) / (2.0 * h);
            if !rel_ok(g[i], fd) {
                failures.push(format!(
                    "critic slice {s} index {i}: analytic {} numeric {fd}",
                    g[i]
                ));
            }
            checked += 1;
        }
    }
    (checked, failures)
}
