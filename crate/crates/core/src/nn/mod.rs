//! Dense networks with hand-written backpropagation, the Gaussian actor,
//! the value critic, optimizers and checkpoints.

pub mod checkpoint;
mod mlp;
mod optim;
mod policy;

pub use checkpoint::{Checkpoint, Record, Role};
pub use mlp::{Activation, Layer, LayerGrad, Mlp, MlpGrads, Tape};
pub use optim::{clip_global_norm, global_norm, Optimizer, OptimizerKind};
pub use policy::{
    gaussian_entropy, gaussian_log_prob, GaussianPolicy, PolicyGrads, ValueNet, LOG_STD_INIT,
    LOG_STD_MAX, LOG_STD_MIN,
};

/// Hidden layer widths of both actor and critic.
pub const HIDDEN_SIZES: [usize; 2] = [512, 256];
