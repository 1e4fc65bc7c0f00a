//! Random and oracle reference policies.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::envgen::{success_poses, GraphMap, NodeId, SpawnModel, TargetPlacement};

/// Visit sequence of a baseline episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineEpisode {
    pub visits: Vec<NodeId>,
    pub success: bool,
}

impl BaselineEpisode {
    pub fn steps_used(&self) -> usize {
        self.visits.len()
    }
}

fn walk(order: impl IntoIterator<Item = NodeId>, hits: &[bool], budget: usize) -> BaselineEpisode {
    let mut visits = Vec::with_capacity(budget);
    for node in order.into_iter().take(budget) {
        visits.push(node);
        if hits[node] {
            return BaselineEpisode { visits, success: true };
        }
    }
    BaselineEpisode { visits, success: false }
}

/// Picks poses uniformly without replacement until the target is found or
/// the budget runs out.
pub fn random_episode<R: Rng + ?Sized>(
    map: &GraphMap,
    placement: &TargetPlacement,
    target_class: &str,
    budget: usize,
    rng: &mut R,
) -> BaselineEpisode {
    let hits = success_poses(map, placement, target_class);
    let mut poses: Vec<NodeId> = map.pose_ids().collect();
    let k = budget.min(poses.len());
    let (chosen, _) = poses.partial_shuffle(rng, k);
    walk(chosen.iter().copied(), &hits, budget)
}

/// Poses ranked by the prior probability that at least one adjacent
/// landmark hosts the target, highest first, ties by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRanking {
    pub entries: Vec<(NodeId, f64)>,
}

impl OracleRanking {
    pub fn order(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    /// `q` for a pose, or `None` for non-pose ids.
    pub fn probability(&self, pose: NodeId) -> Option<f64> {
        self.entries.iter().find(|&&(id, _)| id == pose).map(|&(_, q)| q)
    }
}

/// `q_i = 1 − Π_j (1 − P(target | class of landmark j))` over landmarks
/// adjacent to pose `i`.
pub fn pose_probability(map: &GraphMap, model: &SpawnModel, pose: NodeId, target_class: &str) -> f64 {
    let miss: f64 = map
        .neighbors(pose)
        .iter()
        .filter_map(|&n| map.landmark_class(n))
        .map(|c| 1.0 - model.prob(c, target_class))
        .product();
    1.0 - miss
}

pub fn oracle_rank(map: &GraphMap, model: &SpawnModel, target_class: &str) -> OracleRanking {
    let mut entries: Vec<(NodeId, f64)> = map
        .pose_ids()
        .map(|p| (p, pose_probability(map, model, p, target_class)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    OracleRanking { entries }
}

/// Visits poses in static oracle order. Deterministic.
pub fn oracle_episode(
    map: &GraphMap,
    placement: &TargetPlacement,
    target_class: &str,
    model: &SpawnModel,
    budget: usize,
) -> BaselineEpisode {
    let hits = success_poses(map, placement, target_class);
    let ranking = oracle_rank(map, model, target_class);
    walk(ranking.order(), &hits, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::{generate_map, place_targets, sample_spawn_model, MapConfig, RoomType, SpawnRules};
    use crate::seed::rng_from_seed;

    fn line_map(n: usize, landmarks: &[(&str, NodeId)]) -> GraphMap {
        let classes = landmarks.iter().map(|(c, _)| c.to_string()).collect();
        let edges: Vec<(usize, usize)> = (1..n)
            .map(|i| (i - 1, i))
            .chain(landmarks.iter().enumerate().map(|(k, &(_, p))| (p, n + k)))
            .collect();
        GraphMap::new(vec![RoomType::Kitchen; n], classes, edges).unwrap()
    }

    #[test]
    fn random_baseline_mean_steps_matches_enumeration() {
        // Mean position of the single hit over all 10! orderings equals the
        // mean over its 10 equally likely positions.
        let enumerated: f64 = (1..=10).map(|k| k as f64).sum::<f64>() / 10.0;
        let map = line_map(10, &[("fridge", 4)]);
        let placement = TargetPlacement::from_instances([(10, "milk")]);
        let mut rng = rng_from_seed(1);
        let n = 100_000;
        let mut total = 0usize;
        for _ in 0..n {
            let e = random_episode(&map, &placement, "milk", 10, &mut rng);
            assert!(e.success);
            total += e.steps_used();
        }
        let mean = total as f64 / n as f64;
        assert!((mean - enumerated).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn random_never_repeats_and_respects_budget() {
        let map = line_map(8, &[("fridge", 7)]);
        let placement = TargetPlacement::from_instances([(8, "milk")]);
        let mut rng = rng_from_seed(2);
        for budget in [1, 3, 8, 20] {
            for _ in 0..200 {
                let e = random_episode(&map, &placement, "milk", budget, &mut rng);
                let mut v = e.visits.clone();
                v.sort_unstable();
                v.dedup();
                assert_eq!(v.len(), e.visits.len());
                assert!(e.steps_used() <= budget.min(8));
                assert!(e.visits.iter().all(|&n| n < 8));
            }
        }
    }

    #[test]
    fn every_pose_succeeding_means_one_step() {
        let map = line_map(5, &[("fridge", 0), ("fridge", 1), ("fridge", 2), ("fridge", 3), ("fridge", 4)]);
        let placement = TargetPlacement::from_instances((5..10).map(|l| (l, "milk")));
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert_eq!(random_episode(&map, &placement, "milk", 10, &mut rng).steps_used(), 1);
        }
    }

    #[test]
    fn two_half_landmarks_give_three_quarters() {
        let map = line_map(3, &[("fridge", 1), ("fridge", 1), ("bed", 2)]);
        let rules = SpawnRules::from_pairs([("fridge", "milk")]);
        let model = SpawnModel::uniform(rules, 0.5).unwrap();
        let r = oracle_rank(&map, &model, "milk");
        assert_eq!(r.entries[0], (1, 0.75));
        assert_eq!(r.probability(0), Some(0.0));
        assert_eq!(r.probability(2), Some(0.0));
        assert_eq!(r.order().collect::<Vec<_>>(), vec![1, 0, 2]);

        let mut rng = rng_from_seed(4);
        let n = 100_000;
        let present = (0..n)
            .filter(|_| {
                let p = place_targets(&map, &model, &mut rng);
                success_poses(&map, &p, "milk")[1]
            })
            .count();
        assert!((present as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn oracle_is_deterministic_and_finds_top_pose_first() {
        let map = line_map(4, &[("bed", 0), ("fridge", 2)]);
        let rules = SpawnRules::from_pairs([("fridge", "milk"), ("bed", "milk")]);
        let model = SpawnModel::from_probabilities(
            rules,
            [(("bed".into(), "milk".into()), 0.2), (("fridge".into(), "milk".into()), 0.8)].into(),
        )
        .unwrap();
        let placement = TargetPlacement::from_instances([(5, "milk")]);
        let a = oracle_episode(&map, &placement, "milk", &model, 10);
        assert_eq!(a, BaselineEpisode { visits: vec![2], success: true });
        let placement = TargetPlacement::from_instances([(4, "milk")]);
        let b = oracle_episode(&map, &placement, "milk", &model, 10);
        assert_eq!(b.visits, vec![2, 0]);
        assert_eq!(b, oracle_episode(&map, &placement, "milk", &model, 10));
        let c = oracle_episode(&map, &placement, "milk", &model, 1);
        assert!(!c.success && c.visits == vec![2]);
    }

    #[test]
    fn probability_is_monotone_and_order_is_transform_invariant() {
        let mut rng = rng_from_seed(5);
        let rules = SpawnRules::household();
        for _ in 0..10 {
            let map = generate_map(&MapConfig::desk(), &mut rng);
            let model = sample_spawn_model(&rules, &mut rng);
            for target in model.target_classes() {
                let base = oracle_rank(&map, &model, &target);
                let raised = model.map_probabilities(|p| (p + 0.05).min(0.95)).unwrap();
                let squashed = model.map_probabilities(|p| p * p).unwrap();
                let up = oracle_rank(&map, &raised, &target);
                for &(id, q) in &base.entries {
                    assert!(up.probability(id).unwrap() >= q);
                }
                let sq = oracle_rank(&map, &squashed, &target);
                // Order is only invariant among poses with at most one
                // relevant landmark; compare those.
                let single: Vec<NodeId> = base
                    .order()
                    .filter(|&p| {
                        map.neighbors(p)
                            .iter()
                            .filter(|&&n| map.landmark_class(n).is_some_and(|c| rules.allows(c, &target)))
                            .count()
                            <= 1
                    })
                    .collect();
                let sq_single: Vec<NodeId> = sq.order().filter(|p| single.contains(p)).collect();
                assert_eq!(single, sq_single);
            }
        }
    }

    #[test]
    fn oracle_needs_fewer_steps_than_random() {
        let mut rng = rng_from_seed(6);
        let map = generate_map(&MapConfig::desk(), &mut rng);
        let model = sample_spawn_model(&SpawnRules::household(), &mut rng);
        let (mut oracle, mut random) = (Vec::new(), Vec::new());
        while oracle.len() < 10_000 {
            let placement = place_targets(&map, &model, &mut rng);
            let present: Vec<String> = crate::envgen::present_target_classes(&placement).into_iter().collect();
            if present.is_empty() {
                continue;
            }
            let t = &present[rng.random_range(0..present.len())];
            oracle.push(oracle_episode(&map, &placement, t, &model, 10).steps_used() as f64);
            random.push(random_episode(&map, &placement, t, 10, &mut rng).steps_used() as f64);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let (mo, mr) = (mean(&oracle), mean(&random));
        let se = ((var(&oracle, mo) + var(&random, mr)) / oracle.len() as f64).sqrt();
        assert!(mo + 3.0 * se < mr, "oracle {mo} random {mr}");
    }
}
