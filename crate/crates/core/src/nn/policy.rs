use std::f64::consts::{E, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::{Activation, Mlp, MlpGrads, Tape};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const LOG_STD_INIT: f64 = -0.5;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|ls| ls + 0.5 * (2.0 * PI * E).ln())
        .sum()
}

/// Diagonal Gaussian policy with a tanh-bounded mean network and a
/// state-independent log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    pub mean_net: MlpGrads,
    pub log_std: Vec<f64>,
}

impl PolicyGrads {
    pub fn zeros_like(p: &GaussianPolicy) -> PolicyGrads {
        PolicyGrads {
            mean_net: MlpGrads::zeros_like(&p.mean_net),
            log_std: vec![0.0; p.log_std.len()],
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.mean_net.slices();
        s.push(&self.log_std);
        s
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.mean_net.slices_mut();
        s.push(&mut self.log_std);
        s
    }
}

impl GaussianPolicy {
    /// `obs -> hidden... -> act` with ReLU hidden layers and a tanh output.
    pub fn new(obs_dim: usize, hidden: &[usize], act_dim: usize, seed: u64) -> Result<Self> {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(act_dim);
        let mean_net = Mlp::new(&sizes, Activation::Relu, Activation::Tanh, 1.0, 0.01, seed)?;
        Ok(GaussianPolicy {
            mean_net,
            log_std: vec![LOG_STD_INIT; act_dim],
        })
    }

    pub fn from_parts(mean_net: Mlp, log_std: Vec<f64>) -> Result<Self> {
        if log_std.len() != mean_net.output_len() {
            return Err(Error::Dimension {
                expected: mean_net.output_len(),
                got: log_std.len(),
            });
        }
        Ok(GaussianPolicy { mean_net, log_std })
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_net.input_len()
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut s = self.mean_net.params();
        s.push(&self.log_std);
        s
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.mean_net.params_mut();
        s.push(&mut self.log_std);
        s
    }

    pub fn clamp_log_std(&mut self) {
        for v in &mut self.log_std {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.mean_net.forward(obs)
    }

    pub fn mean_batch(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.mean_net.forward_batch(obs, batch)
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.act_dim() {
            return Err(Error::Dimension {
                expected: self.act_dim(),
                got: action.len(),
            });
        }
        Ok(gaussian_log_prob(&self.mean(obs)?, &self.log_std, action))
    }

    pub fn entropy(&self) -> f64 {
        gaussian_entropy(&self.log_std)
    }

    /// `mean + exp(log_std) * noise` with its log-probability.
    pub fn sample_from_mean<R: Rng + ?Sized>(&self, mean: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lp = gaussian_log_prob(mean, &self.log_std, &action);
        (action, lp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(obs)?;
        Ok(self.sample_from_mean(&mean, rng))
    }

    /// Batched log-probabilities with the tape needed for [`Self::backward`].
    pub fn log_prob_batch(
        &self,
        obs: &[f64],
        actions: &[f64],
        batch: usize,
    ) -> Result<(Vec<f64>, Tape)> {
        let k = self.act_dim();
        if actions.len() != batch * k {
            return Err(Error::Dimension {
                expected: batch * k,
                got: actions.len(),
            });
        }
        let tape = self.mean_net.forward_tape(obs, batch)?;
        let lps = tape
            .output()
            .chunks_exact(k)
            .zip(actions.chunks_exact(k))
            .map(|(m, a)| gaussian_log_prob(m, &self.log_std, a))
            .collect();
        Ok((lps, tape))
    }

    /// Accumulates gradients of `sum_b d_log_prob[b] * log_prob_b +
    /// d_entropy * entropy` into `grads`.
    pub fn backward(
        &self,
        tape: &Tape,
        actions: &[f64],
        d_log_prob: &[f64],
        d_entropy: f64,
        grads: &mut PolicyGrads,
    ) -> Result<()> {
        let k = self.act_dim();
        let batch = tape.batch();
        if d_log_prob.len() != batch || actions.len() != batch * k {
            return Err(Error::Dimension {
                expected: batch,
                got: d_log_prob.len(),
            });
        }
        if tape.output().len() != batch * k {
            return Err(Error::NoForwardPass);
        }
        let inv_var: Vec<f64> = self.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
        let mut d_mean = vec![0.0; batch * k];
        for b in 0..batch {
            let g = d_log_prob[b];
            for j in 0..k {
                let diff = actions[b * k + j] - tape.output()[b * k + j];
                d_mean[b * k + j] = g * diff * inv_var[j];
                grads.log_std[j] += g * (diff * diff * inv_var[j] - 1.0);
            }
        }
        for g in &mut grads.log_std {
            *g += d_entropy;
        }
        self.mean_net.backward(tape, &d_mean, &mut grads.mean_net)?;
        Ok(())
    }
}

/// State-value network with an unbounded output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(obs_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(ValueNet {
            net: Mlp::new(
                &sizes,
                Activation::Relu,
                Activation::Identity,
                1.0,
                1.0,
                seed,
            )?,
        })
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward(obs)?[0])
    }

    pub fn values(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.net.forward_batch(obs, batch)
    }
}
