use std::collections::BTreeSet;

use rand::Rng;

use super::map::{GraphMap, NodeId};
use super::spawn::SpawnModel;
use super::EnvError;

/// Target instances for one episode: `(landmark id, target class)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetPlacement {
    instances: BTreeSet<(NodeId, String)>,
}

impl TargetPlacement {
    pub fn from_instances<I: IntoIterator<Item = (NodeId, S)>, S: Into<String>>(instances: I) -> Self {
        Self {
            instances: instances.into_iter().map(|(id, c)| (id, c.into())).collect(),
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.instances.iter().map(|(id, c)| (*id, c.as_str()))
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn contains(&self, landmark: NodeId, target: &str) -> bool {
        self.instances.contains(&(landmark, target.to_string()))
    }

    /// Checks that every instance sits on a landmark whose class allows it.
    pub fn check(&self, map: &GraphMap, model: &SpawnModel) -> Result<(), EnvError> {
        for (id, t) in self.instances() {
            let class = map
                .landmark_class(id)
                .ok_or_else(|| EnvError::Invalid(format!("target {t} placed on non-landmark {id}")))?;
            if !model.rules().allows(class, t) {
                return Err(EnvError::Invalid(format!("{t} cannot spawn next to {class}")));
            }
        }
        Ok(())
    }
}

/// Samples one episode's targets: every landmark independently hosts each
/// allowed target class with that pair's probability.
pub fn place_targets<R: Rng + ?Sized>(map: &GraphMap, model: &SpawnModel, rng: &mut R) -> TargetPlacement {
    let mut instances = BTreeSet::new();
    for (id, class) in map.landmarks() {
        for (target, p) in model.targets_for(class) {
            if rng.random::<f64>() < *p {
                instances.insert((id, target.clone()));
            }
        }
    }
    TargetPlacement { instances }
}

/// Distinct target classes with at least one instance.
pub fn present_target_classes(placement: &TargetPlacement) -> BTreeSet<String> {
    placement.instances.iter().map(|(_, c)| c.clone()).collect()
}

/// Whether navigating to `goal` finds `target`: some landmark adjacent to
/// the goal hosts an instance of it.
pub fn goal_succeeds(
    map: &GraphMap,
    placement: &TargetPlacement,
    goal: NodeId,
    target: &str,
) -> Result<bool, EnvError> {
    if !map.is_pose(goal) {
        return Err(EnvError::NotAPoseNode(goal));
    }
    Ok(map
        .neighbors(goal)
        .iter()
        .any(|&l| map.is_landmark(l) && placement.contains(l, target)))
}

/// `goal_succeeds` for every pose at once.
pub fn success_poses(map: &GraphMap, placement: &TargetPlacement, target: &str) -> Vec<bool> {
    let mut hit = vec![false; map.n_poses()];
    for (id, t) in placement.instances() {
        if t == target {
            for &p in map.neighbors(id) {
                if map.is_pose(p) {
                    hit[p] = true;
                }
            }
        }
    }
    hit
}
