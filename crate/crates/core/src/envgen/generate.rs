use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::{GraphMap, NodeId, RoomType};

/// Map generation parameters. `Default` reproduces the full-size household
/// maps (1000 poses, 100–500 objects); [`MapConfig::desk`] is a 50-pose
/// variant for fast experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub n_poses: usize,
    /// Probability that a new pose keeps its predecessor's room type.
    pub room_persistence: f64,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Probability of extending a landmark's visibility to the next pose.
    pub visibility_continuation: f64,
    /// Additional uniformly random pose–pose edges on top of the path.
    pub extra_pose_edges: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            n_poses: 1000,
            room_persistence: 0.95,
            objects_min: 100,
            objects_max: 500,
            visibility_continuation: 0.5,
            extra_pose_edges: 0,
        }
    }
}

impl MapConfig {
    pub fn desk() -> Self {
        Self {
            n_poses: 50,
            objects_min: 10,
            objects_max: 60,
            ..Self::default()
        }
    }
}

/// Pose nodes with room labels and the pose–pose edges between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backbone {
    pub rooms: Vec<RoomType>,
    pub edges: Vec<(NodeId, NodeId)>,
}

/// Builds the pose path. The first room is uniform; each following pose
/// keeps the previous room with probability `room_persistence`, otherwise
/// switches to one of the three other rooms uniformly.
pub fn generate_pose_backbone<R: Rng + ?Sized>(
    n_poses: usize,
    room_persistence: f64,
    rng: &mut R,
) -> Backbone {
    assert!(n_poses >= 1, "a backbone needs at least one pose");
    assert!((0.0..=1.0).contains(&room_persistence));
    let mut rooms = Vec::with_capacity(n_poses);
    rooms.push(*RoomType::ALL.choose(rng).expect("four rooms"));
    for _ in 1..n_poses {
        let prev = *rooms.last().expect("non-empty");
        let next = if rng.random::<f64>() < room_persistence {
            prev
        } else {
            let others: Vec<RoomType> = RoomType::ALL.into_iter().filter(|&r| r != prev).collect();
            *others.choose(rng).expect("three rooms")
        };
        rooms.push(next);
    }
    let edges = (1..n_poses).map(|i| (i - 1, i)).collect();
    Backbone { rooms, edges }
}

/// Adds `k` random pose–pose edges not already present. Stops early when
/// the pose graph is complete.
pub fn add_extra_pose_edges<R: Rng + ?Sized>(backbone: &mut Backbone, k: usize, rng: &mut R) {
    let n = backbone.rooms.len();
    let max_edges = n * (n.saturating_sub(1)) / 2;
    let mut present: std::collections::BTreeSet<(usize, usize)> = backbone.edges.iter().copied().collect();
    let mut added = 0;
    while added < k && present.len() < max_edges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        if present.insert((a.min(b), a.max(b))) {
            backbone.edges.push((a.min(b), a.max(b)));
            added += 1;
        }
    }
}

/// Where landmark classes come from.
#[derive(Debug, Clone, Copy)]
pub enum LandmarkClasses<'a> {
    /// Uniform over the anchor pose's room class set.
    ByRoom,
    /// Uniform over a fixed list, ignoring rooms.
    Uniform(&'a [String]),
}

/// Attaches landmarks to a backbone.
///
/// The object count is uniform on `objects.0..=objects.1`. Each object picks
/// an anchor pose uniformly (with replacement), draws its class, links to the
/// anchor and then keeps linking to the following pose on the path with
/// probability `continuation` per step, stopping at a room change.
pub fn populate_landmarks<R: Rng + ?Sized>(
    backbone: &Backbone,
    objects: (usize, usize),
    continuation: f64,
    classes: LandmarkClasses<'_>,
    rng: &mut R,
) -> GraphMap {
    assert!(objects.0 >= 1 && objects.1 >= objects.0, "bad object range");
    assert!((0.0..1.0).contains(&continuation));
    let n_poses = backbone.rooms.len();
    let count = rng.random_range(objects.0..=objects.1);
    let mut landmark_classes = Vec::with_capacity(count);
    let mut edges = backbone.edges.clone();
    for j in 0..count {
        let id = n_poses + j;
        let anchor = rng.random_range(0..n_poses);
        let room = backbone.rooms[anchor];
        let class = match classes {
            LandmarkClasses::ByRoom => room.landmark_classes().choose(rng).expect("non-empty").to_string(),
            LandmarkClasses::Uniform(list) => list.choose(rng).expect("non-empty class list").clone(),
        };
        landmark_classes.push(class);
        edges.push((anchor, id));
        let mut pose = anchor + 1;
        while pose < n_poses && backbone.rooms[pose] == room && rng.random::<f64>() < continuation {
            edges.push((pose, id));
            pose += 1;
        }
    }
    GraphMap::new(backbone.rooms.clone(), landmark_classes, edges).expect("generated ids are in range")
}

/// Backbone, optional extra pose edges, then room-conditioned landmarks.
pub fn generate_map<R: Rng + ?Sized>(config: &MapConfig, rng: &mut R) -> GraphMap {
    let mut backbone = generate_pose_backbone(config.n_poses, config.room_persistence, rng);
    if config.extra_pose_edges > 0 {
        add_extra_pose_edges(&mut backbone, config.extra_pose_edges, rng);
    }
    populate_landmarks(
        &backbone,
        (config.objects_min, config.objects_max),
        config.visibility_continuation,
        LandmarkClasses::ByRoom,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn single_pose_backbone() {
        let b = generate_pose_backbone(1, 0.95, &mut rng_from_seed(0));
        assert_eq!(b.rooms.len(), 1);
        assert!(b.edges.is_empty());
    }

    #[test]
    fn full_persistence_keeps_one_room() {
        let b = generate_pose_backbone(500, 1.0, &mut rng_from_seed(4));
        assert!(b.rooms.iter().all(|&r| r == b.rooms[0]));
    }

    #[test]
    fn zero_persistence_always_switches() {
        let b = generate_pose_backbone(200, 0.0, &mut rng_from_seed(4));
        assert!(b.rooms.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn room_run_length_matches_geometric_mean() {
        // A run ends with probability 0.05 per step, so its mean length is 20.
        // Pooled over 20 backbones of 10,000 poses each.
        let mut rng = rng_from_seed(10);
        let (mut poses, mut runs) = (0usize, 0usize);
        for _ in 0..20 {
            let b = generate_pose_backbone(10_000, 0.95, &mut rng);
            runs += 1 + b.rooms.windows(2).filter(|w| w[0] != w[1]).count();
            poses += b.rooms.len();
        }
        let mean = poses as f64 / runs as f64;
        assert!((19.0..=21.0).contains(&mean), "mean run {mean}");
    }

    #[test]
    fn zero_continuation_gives_single_edges() {
        let b = generate_pose_backbone(30, 0.95, &mut rng_from_seed(5));
        let m = populate_landmarks(&b, (40, 40), 0.0, LandmarkClasses::ByRoom, &mut rng_from_seed(6));
        assert!(m.landmark_ids().all(|id| m.degree(id) == 1));
    }

    #[test]
    fn visibility_stops_at_room_boundary() {
        let b = Backbone {
            rooms: vec![RoomType::Kitchen, RoomType::Office],
            edges: vec![(0, 1)],
        };
        for seed in 0..200 {
            let m = populate_landmarks(&b, (5, 5), 0.99, LandmarkClasses::ByRoom, &mut rng_from_seed(seed));
            for id in m.landmark_ids() {
                assert_eq!(m.degree(id), 1);
            }
        }
    }

    #[test]
    fn generated_maps_satisfy_invariants() {
        for seed in 0..50 {
            let cfg = MapConfig {
                extra_pose_edges: (seed % 3) as usize,
                ..MapConfig::desk()
            };
            let m = generate_map(&cfg, &mut rng_from_seed(seed));
            m.check_generated((cfg.objects_min, cfg.objects_max)).unwrap();
            assert_eq!(m.n_poses(), 50);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(&MapConfig::desk(), &mut rng_from_seed(77));
        let b = generate_map(&MapConfig::desk(), &mut rng_from_seed(77));
        assert_eq!(a, b);
    }

    #[test]
    fn extra_edges_are_added() {
        let mut b = generate_pose_backbone(10, 0.95, &mut rng_from_seed(1));
        add_extra_pose_edges(&mut b, 5, &mut rng_from_seed(2));
        assert_eq!(b.edges.len(), 14);
        add_extra_pose_edges(&mut b, 1000, &mut rng_from_seed(3));
        assert_eq!(b.edges.len(), 45);
    }
}
