use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Adaptive moment estimation.
    Adam { beta1: f64, beta2: f64, eps: f64 },
    /// `param -= lr * grad`.
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state for one parameter set; slices are matched by position.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, shapes: &[usize]) -> Optimizer {
        let zeros = || shapes.iter().map(|&n| vec![0.0; n]).collect();
        Optimizer {
            kind,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn for_params(kind: OptimizerKind, params: &[&[f64]]) -> Optimizer {
        Optimizer::new(kind, &params.iter().map(|p| p.len()).collect::<Vec<_>>())
    }

    /// Applies one descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Dimension {
                    expected: self.m[i].len(),
                    got: p.len(),
                });
            }
        }
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    p.iter_mut().zip(g.iter()).for_each(|(p, g)| *p -= lr * g);
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t.min(i32::MAX as u64) as i32);
                let c2 = 1.0 - beta2.powi(self.t.min(i32::MAX as u64) as i32);
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    let (m, v) = (&mut self.m[i], &mut self.v[i]);
                    for j in 0..p.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        p[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Euclidean norm over all slices.
pub fn global_norm(slices: &[&[f64]]) -> f64 {
    slices
        .iter()
        .flat_map(|s| s.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Rescales the gradients so their global norm is at most `max_norm`;
/// returns the norm before scaling.
pub fn clip_global_norm(slices: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = slices
        .iter()
        .flat_map(|s| s.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        slices
            .iter_mut()
            .for_each(|s| s.iter_mut().for_each(|v| *v *= scale));
    }
    norm
}
