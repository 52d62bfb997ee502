//! Evaluation across fault scenarios, the IK trajectory demo, report
//! writing, and the configuration the command-line tool runs from.

mod config;
mod eval;
mod ik_demo;
mod report;

pub use config::{EvalConfig, RunConfig, HARNESS_KEYS};
pub use eval::*;
pub use ik_demo::*;
pub use report::*;
