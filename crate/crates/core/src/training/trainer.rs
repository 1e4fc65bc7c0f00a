use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::episode::{run_episode, NavScene};
use super::reinforce::{reinforce_gradient, RewardBaseline};
use super::TrainError;
use crate::embeddings::EmbeddingTable;
use crate::envgen::{place_targets, present_target_classes, GraphMap, SpawnModel, TargetPlacement};
use crate::policynet::PolicyParams;
use crate::seed::rng_from_seed;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_episodes: usize,
    /// Goal selections per episode.
    pub budget: usize,
    /// Episodes whose gradients are summed before one Adam step.
    pub batch_episodes: usize,
    pub reward_success: f64,
    /// Per-step decay of the success reward.
    pub gamma: f64,
    pub mask_visited: bool,
    pub use_reward_baseline: bool,
    pub baseline_decay: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_episodes: 50_000,
            budget: 10,
            batch_episodes: 1,
            reward_success: 1.0,
            gamma: 1.0,
            mask_visited: true,
            use_reward_baseline: false,
            baseline_decay: 0.99,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.budget < 1 {
            return Err(TrainError::Config("budget must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(TrainError::Config("gamma must lie in (0, 1]".into()));
        }
        if self.batch_episodes < 1 {
            return Err(TrainError::Config("batch_episodes must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(TrainError::Config("baseline_decay must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A training environment: one map and its hidden spawn model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvBundle {
    pub map: GraphMap,
    pub model: SpawnModel,
}

/// Per-episode training statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub reward: f64,
    pub success: bool,
    pub steps_used: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingCurve {
    pub episodes: Vec<EpisodeStats>,
}

impl TrainingCurve {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Trailing-window success rate after every episode (shorter windows
    /// at the start).
    pub fn rolling_success(&self, window: usize) -> Vec<f64> {
        let window = window.max(1);
        let mut out = Vec::with_capacity(self.episodes.len());
        let mut sum = 0usize;
        for (i, e) in self.episodes.iter().enumerate() {
            sum += usize::from(e.success);
            if i >= window {
                sum -= usize::from(self.episodes[i - window].success);
            }
            out.push(sum as f64 / (i + 1).min(window) as f64);
        }
        out
    }

    /// First episode count after which the full trailing window reaches
    /// `threshold`.
    pub fn episodes_to_reach(&self, threshold: f64, window: usize) -> Option<usize> {
        self.rolling_success(window)
            .iter()
            .enumerate()
            .skip(window.saturating_sub(1))
            .find(|(_, &r)| r >= threshold)
            .map(|(i, _)| i + 1)
    }

    /// Success rate over the last `window` episodes.
    pub fn final_success(&self, window: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(window)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.success).count() as f64 / tail.len() as f64
    }
}

/// Draws a placement with at least one target of a class the policy can
/// be queried with, then picks the target class uniformly.
pub fn sample_episode_task<R: Rng + ?Sized>(
    bundle: &EnvBundle,
    table: &EmbeddingTable,
    rng: &mut R,
) -> Result<(TargetPlacement, String), TrainError> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let placement = place_targets(&bundle.map, &bundle.model, rng);
        let present: Vec<String> = present_target_classes(&placement).into_iter().collect();
        if present.is_empty() {
            continue;
        }
        let target = present[rng.random_range(0..present.len())].clone();
        if table.get(&target).is_none() {
            return Err(TrainError::Policy(crate::policynet::PolicyError::MissingEmbedding(target)));
        }
        return Ok((placement, target));
    }
    Err(TrainError::NoTargets)
}

/// REINFORCE training on one bundle. `on_episode` sees every episode's
/// statistics and the parameters after any update that episode triggered.
pub fn train_with<F>(
    bundle: &EnvBundle,
    table: &EmbeddingTable,
    mut params: PolicyParams,
    config: &TrainConfig,
    mut on_episode: F,
) -> Result<(PolicyParams, TrainingCurve), TrainError>
where
    F: FnMut(&EpisodeStats, &PolicyParams),
{
    config.validate()?;
    let scene = NavScene::new(bundle.map.clone(), table)?;
    let mut rng = rng_from_seed(config.seed);
    let mut adam = AdamState::for_params(config.adam, &params);
    let mut baseline = RewardBaseline::from_config(config);
    let mut pending = params.zeros_like();
    let mut pending_count = 0;
    let mut curve = TrainingCurve::default();
    for episode in 0..config.n_episodes {
        let (placement, target) = sample_episode_task(bundle, table, &mut rng)?;
        let rollout = run_episode(&scene, &placement, &target, table, &params, config, &mut rng)?;
        let out = reinforce_gradient(&rollout, &scene, &params, config, &mut baseline)?;
        pending.add_scaled(1.0, &out.grads);
        pending_count += 1;
        if pending_count == config.batch_episodes || episode + 1 == config.n_episodes {
            adam_step(&mut params, &pending, &mut adam)?;
            if !params.is_finite() {
                return Err(TrainError::NonFiniteParams { episode });
            }
            pending = params.zeros_like();
            pending_count = 0;
        }
        let stats = EpisodeStats {
            episode,
            reward: out.episode_return,
            success: rollout.success,
            steps_used: rollout.steps_used(),
            loss: out.loss,
        };
        on_episode(&stats, &params);
        curve.episodes.push(stats);
    }
    Ok((params, curve))
}

pub fn train(
    bundle: &EnvBundle,
    table: &EmbeddingTable,
    params: PolicyParams,
    config: &TrainConfig,
) -> Result<(PolicyParams, TrainingCurve), TrainError> {
    train_with(bundle, table, params, config, |_, _| {})
}
