//! REINFORCE training of the goal policy, Adam, and proxy pre-training.

mod adam;
mod episode;
mod proxy;
mod reinforce;
mod trainer;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use episode::{run_episode, EpisodeRollout, NavScene, Step};
pub use proxy::{
    make_proxy_instance, mean_bce, pretrain, proxy_auc, proxy_labels, proxy_loss_and_grad, proxy_scores, roc_auc,
    ProxyConfig, ProxyInstance,
};
pub use reinforce::{episode_return, log_prob_sum_gradient, reinforce_gradient, ReinforceOutput, RewardBaseline};
pub use trainer::{sample_episode_task, train, train_with, EnvBundle, EpisodeStats, TrainConfig, TrainingCurve};

use crate::policynet::PolicyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("non-finite gradient in tensor {tensor} at index {index}")]
    NonFiniteGradient { tensor: usize, index: usize },
    #[error("parameters became non-finite at episode {episode}")]
    NonFiniteParams { episode: usize },
    #[error("target class `{0}` is not present in the placement")]
    TargetAbsent(String),
    #[error("no placement with at least one target could be drawn")]
    NoTargets,
    #[error("invalid training config: {0}")]
    Config(String),
}
