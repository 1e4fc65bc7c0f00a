//! Proxy classification task used to pre-train the policy network.
//!
//! Maps are generated with landmarks drawn uniformly from all map and
//! target classes, ignoring rooms and spawn models. Given a query class,
//! the network predicts which pose nodes see an instance of that class.

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::episode::target_vector;
use super::TrainError;
use crate::embeddings::{ClassVocabulary, EmbeddingTable};
use crate::envgen::{generate_pose_backbone, populate_landmarks, GraphMap, LandmarkClasses};
use crate::policynet::{backward, forward, GraphInput, PolicyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxyConfig {
    pub n_poses: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    pub room_persistence: f64,
    pub visibility_continuation: f64,
    pub adam: AdamConfig,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self {
            n_poses: 200,
            objects_min: 30,
            objects_max: 100,
            room_persistence: 0.95,
            visibility_continuation: 0.5,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyInstance {
    pub map: GraphMap,
    pub target: String,
    /// One label per pose node: 1 when the pose sees a landmark of `target`.
    pub labels: Vec<f64>,
}

/// Label for every pose: does it have an edge to a landmark of `class`?
pub fn proxy_labels(map: &GraphMap, class: &str) -> Vec<f64> {
    let mut labels = vec![0.0; map.n_poses()];
    for (id, c) in map.landmarks() {
        if c == class {
            for &p in map.neighbors(id) {
                if map.is_pose(p) {
                    labels[p] = 1.0;
                }
            }
        }
    }
    labels
}

/// A random proxy graph and a query class drawn uniformly from the map and
/// target classes.
pub fn make_proxy_instance<R: Rng + ?Sized>(vocab: &ClassVocabulary, config: &ProxyConfig, rng: &mut R) -> ProxyInstance {
    let classes: Vec<String> = vocab.seen().map(str::to_string).collect();
    let backbone = generate_pose_backbone(config.n_poses, config.room_persistence, rng);
    let map = populate_landmarks(
        &backbone,
        (config.objects_min, config.objects_max),
        config.visibility_continuation,
        LandmarkClasses::Uniform(&classes),
        rng,
    );
    let target = classes[rng.random_range(0..classes.len())].clone();
    let labels = proxy_labels(&map, &target);
    ProxyInstance { map, target, labels }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy of `sigmoid(logit)` against labels, computed
/// stably from logits.
pub fn mean_bce(logits: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(logits.len(), labels.len());
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
        .sum();
    total / logits.len() as f64
}

/// Unmasked pose logits for a proxy instance.
pub fn proxy_scores(params: &PolicyParams, instance: &ProxyInstance, table: &EmbeddingTable) -> Result<Vec<f64>, TrainError> {
    let input = GraphInput::new(&instance.map, table)?;
    let y = target_vector(table, &instance.target)?;
    let trace = forward(params, &input, y);
    Ok(trace.raw_logits.iter().take(instance.map.n_poses()).copied().collect())
}

/// Mean BCE loss and its parameter gradient on one proxy instance.
pub fn proxy_loss_and_grad(
    params: &PolicyParams,
    instance: &ProxyInstance,
    table: &EmbeddingTable,
) -> Result<(f64, PolicyParams), TrainError> {
    let input = GraphInput::new(&instance.map, table)?;
    let y = target_vector(table, &instance.target)?;
    let trace = forward(params, &input, y);
    let n_poses = instance.map.n_poses();
    let logits: Vec<f64> = trace.raw_logits.iter().take(n_poses).copied().collect();
    let loss = mean_bce(&logits, &instance.labels);
    let mut upstream = Array1::zeros(input.n_nodes());
    for i in 0..n_poses {
        upstream[i] = (sigmoid(logits[i]) - instance.labels[i]) / n_poses as f64;
    }
    let grads = backward(params, &input, &trace, &upstream)?;
    Ok((loss, grads))
}

/// Pre-trains on `n_batches` fresh proxy instances, one Adam step each.
/// Returns the parameters and the per-batch losses.
pub fn pretrain<R: Rng + ?Sized>(
    mut params: PolicyParams,
    vocab: &ClassVocabulary,
    table: &EmbeddingTable,
    n_batches: usize,
    config: &ProxyConfig,
    rng: &mut R,
) -> Result<(PolicyParams, Vec<f64>), TrainError> {
    let mut adam = AdamState::for_params(config.adam, &params);
    let mut losses = Vec::with_capacity(n_batches);
    for batch in 0..n_batches {
        let instance = make_proxy_instance(vocab, config, rng);
        let (loss, grads) = proxy_loss_and_grad(&params, &instance, table)?;
        adam_step(&mut params, &grads, &mut adam)?;
        if !params.is_finite() {
            return Err(TrainError::NonFiniteParams { episode: batch });
        }
        losses.push(loss);
    }
    Ok((params, losses))
}

/// Area under the ROC curve of `scores` for binary `labels` (ties count
/// one half). `None` when either class is missing.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&y| y > 0.5).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // Mann-Whitney U via average ranks.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] > 0.5 {
                rank_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Pooled pose-level AUC over `n_instances` fresh proxy instances.
pub fn proxy_auc<R: Rng + ?Sized>(
    params: &PolicyParams,
    vocab: &ClassVocabulary,
    table: &EmbeddingTable,
    config: &ProxyConfig,
    n_instances: usize,
    rng: &mut R,
) -> Result<Option<f64>, TrainError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_instances {
        let inst = make_proxy_instance(vocab, config, rng);
        scores.extend(proxy_scores(params, &inst, table)?);
        labels.extend(inst.labels);
    }
    Ok(roc_auc(&scores, &labels))
}
