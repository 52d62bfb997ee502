use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Activation> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(self, xs: &mut [f64]) {
        match self {
            Activation::Relu => xs.iter_mut().for_each(|x| *x = x.max(0.0)),
            Activation::Tanh => xs.iter_mut().for_each(|x| *x = x.tanh()),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` in place by the derivative, expressed through the
    /// activation's output `y`.
    fn backprop(self, y: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Relu => grad.iter_mut().zip(y).for_each(|(g, &y)| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.iter_mut().zip(y).for_each(|(g, &y)| *g *= 1.0 - y * y),
            Activation::Identity => {}
        }
    }
}

/// Dense layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

/// Fully connected network with one hidden activation and a separate output
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Activations recorded by a forward pass; index 0 is the input batch.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> MlpGrads {
        MlpGrads {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// `c = a * b^T (+ c if accumulate)` for row-major `a: m x k`, `b: n x k`.
fn gemm_abt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64], accumulate: bool) {
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: slice lengths are checked by the callers against m, k, n and the
    // strides describe in-bounds row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c += a^T * b` for row-major `a: k x m`, `b: k x n`.
fn gemm_atb_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    // SAFETY: see gemm_abt.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c = a * b` for row-major `a: m x k`, `b: k x n`.
fn gemm_ab(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    // SAFETY: see gemm_abt.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Orthogonal matrix (`rows x cols`, row-major) scaled by `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let g = DMatrix::<f64>::from_fn(tall, short, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign fix so the result is uniformly distributed over orthogonal matrices.
    for j in 0..short {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let q = if rows >= cols { q } else { q.transpose() };
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = gain * q[(i, j)];
        }
    }
    out
}

impl Mlp {
    /// Orthogonal weights (gain `hidden_gain` on hidden layers and
    /// `output_gain` on the last), zero biases.
    pub fn new(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        hidden_gain: f64,
        output_gain: f64,
        seed: u64,
    ) -> Result<Mlp> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!("invalid layer sizes {:?}", sizes)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let gain = if i + 1 == n { output_gain } else { hidden_gain };
                Layer {
                    inputs: sizes[i],
                    outputs: sizes[i + 1],
                    weights: orthogonal(sizes[i + 1], sizes[i], gain, &mut rng),
                    bias: vec![0.0; sizes[i + 1]],
                }
            })
            .collect();
        Ok(Mlp {
            layers,
            hidden,
            output,
        })
    }

    pub fn from_layers(layers: Vec<Layer>, hidden: Activation, output: Activation) -> Result<Mlp> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Dimension {
                    expected: w[0].outputs,
                    got: w[1].inputs,
                });
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Dimension {
                    expected: l.inputs * l.outputs,
                    got: l.weights.len(),
                });
            }
        }
        Ok(Mlp {
            layers,
            hidden,
            output,
        })
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_len()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Forward pass over `batch` row-major inputs, keeping every activation.
    pub fn forward_tape(&self, input: &[f64], batch: usize) -> Result<Tape> {
        let n_in = self.input_len();
        if input.len() != batch * n_in {
            return Err(Error::Dimension {
                expected: batch * n_in,
                got: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = Vec::with_capacity(batch * layer.outputs);
            for _ in 0..batch {
                y.extend_from_slice(&layer.bias);
            }
            let x = &activations[i];
            gemm_abt(
                batch,
                layer.inputs,
                layer.outputs,
                x,
                &layer.weights,
                &mut y,
                true,
            );
            let act = if i + 1 == self.layers.len() {
                self.output
            } else {
                self.hidden
            };
            act.apply(&mut y);
            activations.push(y);
        }
        Ok(Tape { batch, activations })
    }

    /// Batched forward pass; returns `batch x outputs` row-major.
    pub fn forward_batch(&self, input: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut tape = self.forward_tape(input, batch)?;
        Ok(tape.activations.pop().unwrap_or_default())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_batch(input, 1)
    }

    /// Accumulates parameter gradients of a scalar loss into `grads`, given
    /// the loss adjoint with respect to the network output. Returns the
    /// adjoint with respect to the input batch.
    pub fn backward(
        &self,
        tape: &Tape,
        d_output: &[f64],
        grads: &mut MlpGrads,
    ) -> Result<Vec<f64>> {
        let sizes = self.sizes();
        let matches = tape.activations.len() == sizes.len()
            && tape
                .activations
                .iter()
                .zip(&sizes)
                .all(|(a, &s)| a.len() == tape.batch * s);
        if !matches {
            return Err(Error::NoForwardPass);
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Dimension {
                expected: self.layers.len(),
                got: grads.layers.len(),
            });
        }
        let batch = tape.batch;
        if d_output.len() != batch * self.output_len() {
            return Err(Error::Dimension {
                expected: batch * self.output_len(),
                got: d_output.len(),
            });
        }
        let mut delta = d_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let act = if i + 1 == self.layers.len() {
                self.output
            } else {
                self.hidden
            };
            act.backprop(&tape.activations[i + 1], &mut delta);
            let g = &mut grads.layers[i];
            gemm_atb_acc(
                layer.outputs,
                batch,
                layer.inputs,
                &delta,
                &tape.activations[i],
                &mut g.weights,
            );
            for row in delta.chunks_exact(layer.outputs) {
                g.bias.iter_mut().zip(row).for_each(|(b, d)| *b += d);
            }
            let mut next = vec![0.0; batch * layer.inputs];
            gemm_ab(
                batch,
                layer.outputs,
                layer.inputs,
                &delta,
                &layer.weights,
                &mut next,
            );
            delta = next;
        }
        Ok(delta)
    }
}
