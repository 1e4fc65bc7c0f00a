use ndarray::{Array1, ArrayView1};
use rand::Rng;

use super::{TrainConfig, TrainError};
use crate::embeddings::EmbeddingTable;
use crate::envgen::{success_poses, GraphMap, NodeId, TargetPlacement};
use crate::policynet::{forward, log_prob, sample_goal, ForwardTrace, GraphInput, PolicyError, PolicyParams};

/// A map together with its network input.
#[derive(Debug, Clone, PartialEq)]
pub struct NavScene {
    pub map: GraphMap,
    pub input: GraphInput,
}

impl NavScene {
    pub fn new(map: GraphMap, table: &EmbeddingTable) -> Result<Self, PolicyError> {
        let input = GraphInput::new(&map, table)?;
        Ok(Self { map, input })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub node: NodeId,
    pub log_prob: f64,
}

/// One learned-policy episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRollout {
    pub steps: Vec<Step>,
    pub success: bool,
    pub target_class: String,
    /// Whether previously chosen poses were masked at later steps.
    pub mask_visited: bool,
    /// The episode's single forward pass. Logits do not depend on the
    /// visited set except through masking, so one pass serves every step.
    pub trace: ForwardTrace,
}

impl EpisodeRollout {
    pub fn steps_used(&self) -> usize {
        self.steps.len()
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.steps.iter().map(|s| s.node).collect()
    }

    /// Logits seen at step `t` (landmarks and, if enabled, earlier choices
    /// masked).
    pub fn step_logits(&self, t: usize) -> Array1<f64> {
        if self.mask_visited {
            let visited: Vec<NodeId> = self.steps[..t].iter().map(|s| s.node).collect();
            self.trace.masked_logits(&visited)
        } else {
            self.trace.logits.clone()
        }
    }
}

pub(crate) fn target_vector<'a>(table: &'a EmbeddingTable, target: &str) -> Result<ArrayView1<'a, f64>, TrainError> {
    table
        .get(target)
        .map(ArrayView1::from)
        .ok_or_else(|| TrainError::Policy(PolicyError::MissingEmbedding(target.to_string())))
}

/// Samples goals from the policy until the target is found or the budget
/// runs out. The agent always reaches the goal it picks.
pub fn run_episode<R: Rng + ?Sized>(
    scene: &NavScene,
    placement: &TargetPlacement,
    target_class: &str,
    table: &EmbeddingTable,
    params: &PolicyParams,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<EpisodeRollout, TrainError> {
    let hits = success_poses(&scene.map, placement, target_class);
    if !hits.iter().any(|&h| h) && !placement.instances().any(|(_, t)| t == target_class) {
        return Err(TrainError::TargetAbsent(target_class.to_string()));
    }
    let y = target_vector(table, target_class)?;
    let trace = forward(params, &scene.input, y);
    let mut logits = trace.logits.clone();
    let mut steps = Vec::with_capacity(config.budget);
    let mut success = false;
    for _ in 0..config.budget {
        let node = sample_goal(&logits, rng)?;
        steps.push(Step {
            node,
            log_prob: log_prob(&logits, node),
        });
        if hits[node] {
            success = true;
            break;
        }
        if config.mask_visited {
            logits[node] = crate::policynet::MASK_LOGIT;
        }
    }
    Ok(EpisodeRollout {
        steps,
        success,
        target_class: target_class.to_string(),
        mask_visited: config.mask_visited,
        trace,
    })
}
