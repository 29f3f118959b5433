//! Sampling 2-partitions of grid graphs from spanning-tree distributions via
//! loop-erased random walks on the planar dual, separation-fairness audits,
//! and exhaustive checkers for the combinatorial machinery behind them.

pub mod audit;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod recom;
pub mod reconnect;
pub mod sampler;
pub mod structures;
pub mod walkmap;
pub mod walks;

pub use error::{Error, Result};
