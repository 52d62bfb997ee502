pub mod environment;
pub mod error;
pub mod faults;
pub mod harness;
pub mod keyvalue;
pub mod kinematics;
pub mod nn;
pub mod ppo;

pub use error::{Error, Result};
