//! The graph-convolutional goal policy.
//!
//! One graph-convolution layer embeds every node; the target class vector
//! goes through the same weights. A three-layer MLP scores each node from
//! `concat(node embedding, target embedding)`, landmarks are masked and the
//! scores act as logits of a categorical distribution over goals.

mod graph;
mod network;
mod params;
mod sampling;

use thiserror::Error;

pub use graph::{build_features, normalized_adjacency, GraphInput, NodeFeatures, NormalizedAdjacency};
pub use network::{
    apply_mask, backward, forward, graph_convolution, graph_convolution_with_pre, head_logits, policy_logits,
    target_embedding, ForwardTrace, HeadCache, MASK_LOGIT,
};
pub use params::{ParamGrads, PolicyParams, CONV_DIM, HIDDEN1, HIDDEN2, TENSOR_NAMES};
pub use sampling::{log_prob, logsumexp, sample_goal, softmax};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("no embedding for class `{0}`")]
    MissingEmbedding(String),
    #[error("every node is masked")]
    AllMasked,
    #[error("trace does not match this input: {0}")]
    TraceMismatch(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}
