use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Every joint of the chain is locked, so no Jacobian column remains.
    #[error("all joints are locked: the chain is unactuated")]
    UnactuatedChain,

    #[error("joint index {index} out of range (expected 0..{count})")]
    JointIndex { index: usize, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid fault scenario '{0}'")]
    FaultSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("cannot step a terminated episode")]
    TerminalState,

    /// `backward` was called with a tape that does not belong to this network.
    #[error("backward pass without a matching forward pass")]
    NoForwardPass,

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error("rollout buffer is empty")]
    EmptyBuffer,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
