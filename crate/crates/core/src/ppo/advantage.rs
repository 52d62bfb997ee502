//! Discounted returns, generalized advantage estimates and the PPO loss
//! terms.

/// How a stored transition ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEnd {
    /// The episode continues past this step.
    Continue,
    /// The episode ended with nothing left to earn.
    Terminal,
    /// The episode was cut off; `bootstrap` estimates the value of the
    /// final observation.
    Truncated { bootstrap: f64 },
}

impl StepEnd {
    pub fn is_end(self) -> bool {
        !matches!(self, StepEnd::Continue)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageEstimates {
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
    pub td_errors: Vec<f64>,
}

/// Value of the state after step `t` as seen by the advantage recursion.
fn next_value(t: usize, ends: &[StepEnd], values: &[f64]) -> f64 {
    match ends[t] {
        StepEnd::Terminal => 0.0,
        StepEnd::Truncated { bootstrap } => bootstrap,
        StepEnd::Continue => values[t + 1],
    }
}

/// Discounted suffix sums of one environment's rewards, restarting at
/// episode ends. `last_value` bootstraps a rollout that stops mid-episode.
pub fn compute_returns(rewards: &[f64], ends: &[StepEnd], gamma: f64, last_value: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), ends.len());
    let n = rewards.len();
    let mut out = vec![0.0; n];
    let mut running = last_value;
    for t in (0..n).rev() {
        running = match ends[t] {
            StepEnd::Continue => running,
            StepEnd::Terminal => 0.0,
            StepEnd::Truncated { bootstrap } => bootstrap,
        };
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    out
}

/// Backward recursion `A_t = delta_t + gamma * lam * A_{t+1}`, reset at
/// episode ends. `values` holds one extra trailing entry for the state after
/// the last step.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    ends: &[StepEnd],
    gamma: f64,
    lam: f64,
) -> AdvantageEstimates {
    let n = rewards.len();
    assert_eq!(ends.len(), n);
    assert_eq!(values.len(), n + 1);
    let mut advantages = vec![0.0; n];
    let mut td_errors = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next = next_value(t, ends, values);
        let delta = rewards[t] + gamma * next - values[t];
        if ends[t].is_end() {
            running = 0.0;
        }
        running = delta + gamma * lam * running;
        td_errors[t] = delta;
        advantages[t] = running;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    AdvantageEstimates {
        returns,
        advantages,
        td_errors,
    }
}

/// Largest log-ratio magnitude passed to `exp`.
pub const LOG_RATIO_LIMIT: f64 = 30.0;

pub fn prob_ratio(log_prob_new: f64, log_prob_old: f64) -> f64 {
    (log_prob_new - log_prob_old)
        .clamp(-LOG_RATIO_LIMIT, LOG_RATIO_LIMIT)
        .exp()
}

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn clipped_term(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

pub fn clipped_surrogate(ratios: &[f64], advantages: &[f64], eps: f64) -> f64 {
    assert_eq!(ratios.len(), advantages.len());
    if ratios.is_empty() {
        return 0.0;
    }
    ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| clipped_term(r, a, eps))
        .sum::<f64>()
        / ratios.len() as f64
}

/// Derivative of `clipped_term` with respect to the new log-probability.
pub fn clipped_term_grad(log_prob_new: f64, log_prob_old: f64, advantage: f64, eps: f64) -> f64 {
    let diff = log_prob_new - log_prob_old;
    if diff.abs() > LOG_RATIO_LIMIT {
        return 0.0;
    }
    let r = diff.exp();
    let unclipped = r * advantage;
    let clipped = r.clamp(1.0 - eps, 1.0 + eps) * advantage;
    let inside = (1.0 - eps..=1.0 + eps).contains(&r);
    if inside || unclipped < clipped {
        advantage * r
    } else {
        0.0
    }
}

pub fn value_loss(predicted: &[f64], returns: &[f64]) -> f64 {
    assert_eq!(predicted.len(), returns.len());
    if predicted.is_empty() {
        return 0.0;
    }
    predicted
        .iter()
        .zip(returns)
        .map(|(v, r)| (v - r) * (v - r))
        .sum::<f64>()
        / predicted.len() as f64
}

/// The objective that training ascends.
pub fn total_loss(l_clip: f64, l_value: f64, entropy: f64, c1: f64, c2: f64) -> f64 {
    l_clip - c1 * l_value + c2 * entropy
}

/// Zero-mean, unit-variance copy; a constant input maps to zeros.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terminal(n: usize) -> Vec<StepEnd> {
        let mut e = vec![StepEnd::Continue; n];
        e[n - 1] = StepEnd::Terminal;
        e
    }

    #[test]
    fn returns_examples() {
        assert_eq!(
            compute_returns(&[1.0, 1.0, 1.0], &terminal(3), 1.0, 99.0),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(
            compute_returns(&[4.0, -1.0, 2.0], &terminal(3), 0.0, 0.0),
            vec![4.0, -1.0, 2.0]
        );
        let r = compute_returns(&[1.0, 2.0, 3.0], &terminal(3), 0.9, 0.0);
        for (a, b) in r.iter().zip([5.23, 4.7, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn returns_restart_and_bootstrap() {
        let ends = [
            StepEnd::Continue,
            StepEnd::Truncated { bootstrap: 10.0 },
            StepEnd::Continue,
        ];
        let r = compute_returns(&[1.0, 1.0, 1.0], &ends, 0.5, 4.0);
        assert_eq!(r, vec![1.0 + 0.5 * 6.0, 6.0, 3.0]);
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let values = [0.5, 0.2, 0.1, 0.7];
        let ends = [StepEnd::Continue; 3];
        let est = compute_gae(&[1.0, 0.0, 2.0], &values, &ends, 0.9, 0.0);
        assert_eq!(est.advantages, est.td_errors);
        assert!((est.td_errors[2] - (2.0 + 0.9 * 0.7 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn gae_unit_discount_telescopes() {
        let rewards = [1.0, 0.5, -2.0, 3.0];
        let values = [0.3, -0.1, 0.8, 0.2, 0.0];
        let est = compute_gae(&rewards, &values, &terminal(4), 1.0, 1.0);
        let returns = compute_returns(&rewards, &terminal(4), 1.0, 0.0);
        for t in 0..4 {
            assert!((est.advantages[t] - (returns[t] - values[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_does_not_leak_across_episodes() {
        let rewards = [1.0, 1.0, 5.0, 5.0];
        let ends = [
            StepEnd::Continue,
            StepEnd::Terminal,
            StepEnd::Continue,
            StepEnd::Continue,
        ];
        let values = [0.0, 0.0, 0.0, 0.0, 0.0];
        let a = compute_gae(&rewards, &values, &ends, 0.9, 0.9);
        let b = compute_gae(&rewards[..2], &values[..3], &ends[..2], 0.9, 0.9);
        assert_eq!(&a.advantages[..2], &b.advantages[..]);
    }

    #[test]
    fn ratio_and_clip_examples() {
        assert_eq!(prob_ratio(-1.3, -1.3), 1.0);
        assert!((prob_ratio(2f64.ln(), 0.0) - 2.0).abs() < 1e-15);
        assert!(prob_ratio(1e6, 0.0).is_finite());
        assert_eq!(prob_ratio(1e6, 0.0), 30f64.exp());
        assert_eq!(clipped_surrogate(&[1.0], &[1.0], 0.2), 1.0);
        assert!((clipped_surrogate(&[2.0], &[1.0], 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_surrogate(&[0.5], &[-1.0], 0.2) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn value_and_total_examples() {
        assert_eq!(value_loss(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(value_loss(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        assert_eq!(value_loss(&[1.0, 2.0], &[0.0, 4.0]), 2.5);
        assert_eq!(total_loss(1.0, 0.0, 0.0, 0.7, 0.3), 1.0);
        assert!((total_loss(1.0, 2.0, 3.0, 0.5, 0.01) - 0.03).abs() < 1e-15);
        assert_eq!(total_loss(1.5, 2.0, 3.0, 0.0, 0.0), 1.5);
    }

    #[test]
    fn clipped_gradient_matches_finite_differences() {
        for &(new, old, adv) in &[
            (0.05, 0.0, 1.0),
            (-0.1, 0.0, -0.7),
            (0.5, 0.0, 1.0),
            (0.5, 0.0, -1.0),
            (-0.6, 0.0, -2.0),
            (-0.6, 0.0, 2.0),
        ] {
            let f = |x: f64| clipped_term(prob_ratio(x, old), adv, 0.2);
            let numeric = (f(new + 1e-6) - f(new - 1e-6)) / 2e-6;
            let analytic = clipped_term_grad(new, old, adv, 0.2);
            assert!(
                (numeric - analytic).abs() <= 1e-4 * analytic.abs().max(1e-6),
                "{new} {adv}: {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn normalization_moments() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 * 0.3 - 4.0)
            .collect();
        let n = normalize(&xs);
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let std = (n.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n.len() as f64).sqrt();
        assert!(mean.abs() <= 1e-8);
        assert!((std - 1.0).abs() <= 1e-6);
        assert_eq!(normalize(&[2.0, 2.0]), vec![0.0, 0.0]);
    }
}
