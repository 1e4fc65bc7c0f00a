//! Object search on semantic graph maps with a graph-convolutional policy.
//!
//! The crate generates household graph maps with hidden target-spawn
//! models, trains a graph-convolutional policy with REINFORCE, and compares
//! it against random and oracle baselines.

pub mod baselines;
pub mod embeddings;
pub mod envgen;
pub mod harness;
pub mod policynet;
pub mod seed;
pub mod training;
