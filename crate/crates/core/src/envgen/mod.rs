//! Procedural household maps, hidden spawn models and per-episode target
//! placements.

mod generate;
mod map;
mod placement;
mod spawn;

use thiserror::Error;

pub use generate::{
    add_extra_pose_edges, generate_map, generate_pose_backbone, populate_landmarks, Backbone,
    LandmarkClasses, MapConfig,
};
pub use map::{GraphMap, NodeId, RoomType};
pub use placement::{goal_succeeds, place_targets, present_target_classes, success_poses, TargetPlacement};
pub use spawn::{sample_spawn_model, SpawnModel, SpawnRules, MAX_SPAWN_PROB, MIN_SPAWN_PROB};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("node {0} is not a pose node")]
    NotAPoseNode(NodeId),
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
