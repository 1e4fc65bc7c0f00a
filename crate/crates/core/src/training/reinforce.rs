use ndarray::Array1;

use super::episode::{EpisodeRollout, NavScene};
use super::{TrainConfig, TrainError};
use crate::policynet::{backward, softmax, ParamGrads, PolicyParams, MASK_LOGIT};

/// Exponential moving average of episode returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBaseline {
    pub enabled: bool,
    pub decay: f64,
    pub value: f64,
}

impl RewardBaseline {
    pub fn new(enabled: bool, decay: f64) -> Self {
        Self {
            enabled,
            decay,
            value: 0.0,
        }
    }

    pub fn from_config(config: &TrainConfig) -> Self {
        Self::new(config.use_reward_baseline, config.baseline_decay)
    }

    pub fn current(&self) -> f64 {
        if self.enabled {
            self.value
        } else {
            0.0
        }
    }

    pub fn update(&mut self, episode_return: f64) {
        if self.enabled {
            self.value = self.decay * self.value + (1.0 - self.decay) * episode_return;
        }
    }
}

/// `reward_success · gamma^(steps − 1)` on success, else 0.
pub fn episode_return(rollout: &EpisodeRollout, config: &TrainConfig) -> f64 {
    if rollout.success {
        config.reward_success * config.gamma.powi(rollout.steps_used() as i32 - 1)
    } else {
        0.0
    }
}

/// `d/dp Σ_t log π_t(a_t)` where `π_t` is the softmax of the step-`t`
/// masked logits. Masked entries get zero.
pub fn log_prob_sum_gradient(rollout: &EpisodeRollout) -> Array1<f64> {
    let n = rollout.trace.n_nodes();
    let mut g = Array1::zeros(n);
    for (t, step) in rollout.steps.iter().enumerate() {
        let q = rollout.step_logits(t);
        let pi = softmax(&q);
        for i in 0..n {
            if q[i] != MASK_LOGIT {
                g[i] -= pi[i];
            }
        }
        g[step.node] += 1.0;
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforceOutput {
    pub loss: f64,
    pub episode_return: f64,
    pub advantage: f64,
    pub grads: ParamGrads,
}

/// REINFORCE surrogate `loss = −A · Σ_t log π(a_t)` with `A = R − b`, and
/// its gradient. The baseline is read before being updated with `R`.
pub fn reinforce_gradient(
    rollout: &EpisodeRollout,
    scene: &NavScene,
    params: &PolicyParams,
    config: &TrainConfig,
    baseline: &mut RewardBaseline,
) -> Result<ReinforceOutput, TrainError> {
    assert!(!rollout.steps.is_empty(), "rollout has no steps");
    let ret = episode_return(rollout, config);
    let advantage = ret - baseline.current();
    baseline.update(ret);
    let log_prob_sum: f64 = rollout.steps.iter().map(|s| s.log_prob).sum();
    let loss = -advantage * log_prob_sum;
    let grads = if advantage == 0.0 {
        params.zeros_like()
    } else {
        let upstream = log_prob_sum_gradient(rollout) * (-advantage);
        backward(params, &scene.input, &rollout.trace, &upstream)?
    };
    Ok(ReinforceOutput {
        loss,
        episode_return: ret,
        advantage,
        grads,
    })
}
