use serde::{Deserialize, Serialize};

use super::config::{EvalConfig, EvalMode, ExperimentConfig, UnseenClassSpec};
use super::HarnessError;
use crate::baselines::{oracle_episode, random_episode};
use crate::embeddings::{ClassVocabulary, EmbeddingTable};
use crate::envgen::{generate_map, sample_spawn_model, GraphMap, MapConfig, SpawnRules};
use crate::policynet::PolicyParams;
use crate::seed::{derive_rng, derive_seed, rng_from_seed};
use crate::training::{pretrain, run_episode, sample_episode_task, train_with, EnvBundle, EpisodeStats, NavScene, TrainConfig, TrainingCurve};

/// A trained policy and the environment it was trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub spawn_model_id: usize,
    pub agent_id: usize,
    pub bundle: EnvBundle,
    pub params: PolicyParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Learned,
    Random,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Learned, PolicyKind::Random, PolicyKind::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Learned => "learned",
            PolicyKind::Random => "random",
            PolicyKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown policy `{s}`")))
    }
}

/// One evaluation episode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EvalRecord {
    pub spawn_model_id: usize,
    pub agent_id: usize,
    pub map_id: usize,
    pub episode_id: usize,
    pub policy: String,
    pub target_class: String,
    pub success: bool,
    /// Goals visited; only meaningful for successful episodes.
    pub steps: usize,
    pub seed: u64,
}

fn mode_tag(mode: EvalMode) -> u64 {
    match mode {
        EvalMode::TrainEnv => 0,
        EvalMode::UnseenEnv => 1,
        EvalMode::UnseenClass => 2,
    }
}

const MAX_MAP_ATTEMPTS: usize = 1000;

/// Draws maps until one has a landmark that can host some target under
/// `rules`.
fn generate_hosting_map<R: rand::Rng + ?Sized>(
    env: &MapConfig,
    rules: &SpawnRules,
    rng: &mut R,
) -> Result<GraphMap, HarnessError> {
    for _ in 0..MAX_MAP_ATTEMPTS {
        let map = generate_map(env, rng);
        let hosts = rules.map_classes();
        if map.landmarks().any(|(_, c)| hosts.contains(c)) {
            return Ok(map);
        }
    }
    Err(HarnessError::Config(format!(
        "no map with a target-hosting landmark in {MAX_MAP_ATTEMPTS} draws"
    )))
}

/// The map and hidden spawn model an agent trains on. Agents under the same
/// `spawn_model_id` share the model; every agent gets its own map.
pub fn training_bundle(
    root_seed: u64,
    env: &MapConfig,
    rules: &SpawnRules,
    spawn_model_id: usize,
    agent_id: usize,
) -> Result<EnvBundle, HarnessError> {
    let model = sample_spawn_model(rules, &mut derive_rng(root_seed, "spawn-model", &[spawn_model_id as u64]));
    let map = generate_hosting_map(
        env,
        rules,
        &mut derive_rng(root_seed, "train-map", &[spawn_model_id as u64, agent_id as u64]),
    )?;
    Ok(EnvBundle { map, model })
}

/// Runs every policy in `policies` on the same episodes.
///
/// For each agent, map and target a placement and target class are drawn
/// once from the episode seed; each policy then runs with its own stream
/// derived from that seed. `rules` is the allowed-pair relation used for
/// fresh spawn models in the unseen modes.
pub fn evaluate(
    agents: &[Agent],
    policies: &[PolicyKind],
    table: &EmbeddingTable,
    rules: &SpawnRules,
    env: &MapConfig,
    config: &EvalConfig,
) -> Result<Vec<EvalRecord>, HarnessError> {
    config.validate()?;
    let tag = mode_tag(config.mode);
    let rollout_config = TrainConfig {
        budget: config.budget,
        mask_visited: true,
        ..TrainConfig::default()
    };
    let mut records = Vec::new();
    for agent in agents {
        let (m, a) = (agent.spawn_model_id as u64, agent.agent_id as u64);
        for map_id in 0..config.n_maps_per_agent {
            let bundle = match config.mode {
                EvalMode::TrainEnv => agent.bundle.clone(),
                EvalMode::UnseenEnv | EvalMode::UnseenClass => {
                    let mut rng = derive_rng(config.seed, "eval-env", &[tag, m, a, map_id as u64]);
                    let map = generate_hosting_map(env, rules, &mut rng)?;
                    let model = sample_spawn_model(rules, &mut rng);
                    EnvBundle { map, model }
                }
            };
            let scene = if policies.contains(&PolicyKind::Learned) {
                Some(NavScene::new(bundle.map.clone(), table)?)
            } else {
                None
            };
            for episode_id in 0..config.n_targets_per_map {
                let seed = derive_seed(config.seed, "eval-episode", &[tag, m, a, map_id as u64, episode_id as u64]);
                let (placement, target) = sample_episode_task(&bundle, table, &mut rng_from_seed(seed))?;
                for (k, &policy) in policies.iter().enumerate() {
                    let mut rng = derive_rng(seed, "policy", &[k as u64]);
                    let (success, steps) = match policy {
                        PolicyKind::Learned => {
                            let scene = scene.as_ref().expect("scene built for learned policy");
                            let r = run_episode(scene, &placement, &target, table, &agent.params, &rollout_config, &mut rng)?;
                            (r.success, r.steps_used())
                        }
                        PolicyKind::Random => {
                            let r = random_episode(&bundle.map, &placement, &target, config.budget, &mut rng);
                            (r.success, r.steps_used())
                        }
                        PolicyKind::Oracle => {
                            let r = oracle_episode(&bundle.map, &placement, &target, &bundle.model, config.budget);
                            (r.success, r.steps_used())
                        }
                    };
                    records.push(EvalRecord {
                        spawn_model_id: agent.spawn_model_id,
                        agent_id: agent.agent_id,
                        map_id,
                        episode_id,
                        policy: policy.name().to_string(),
                        target_class: target.clone(),
                        success,
                        steps,
                        seed,
                    });
                }
            }
        }
    }
    records.sort();
    Ok(records)
}

/// Records of the same agents evaluated in their training environment and
/// in unseen environments.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationReport {
    pub train_env: Vec<EvalRecord>,
    pub unseen_env: Vec<EvalRecord>,
}

pub fn run_generalization_suite(
    agents: &[Agent],
    policies: &[PolicyKind],
    table: &EmbeddingTable,
    rules: &SpawnRules,
    env: &MapConfig,
    config: &EvalConfig,
) -> Result<GeneralizationReport, HarnessError> {
    let train_env = evaluate(
        agents,
        policies,
        table,
        rules,
        env,
        &EvalConfig {
            mode: EvalMode::TrainEnv,
            ..config.clone()
        },
    )?;
    let unseen_env = evaluate(
        agents,
        policies,
        table,
        rules,
        env,
        &EvalConfig {
            mode: EvalMode::UnseenEnv,
            ..config.clone()
        },
    )?;
    Ok(GeneralizationReport { train_env, unseen_env })
}

/// Evaluates on fresh maps where only the classes in `spec` spawn, each on
/// its anchor's allowed pairs with fresh probabilities.
#[allow(clippy::too_many_arguments)]
pub fn run_unseen_class_suite(
    agents: &[Agent],
    policies: &[PolicyKind],
    spec: &UnseenClassSpec,
    vocab: &ClassVocabulary,
    table: &EmbeddingTable,
    base_rules: &SpawnRules,
    env: &MapConfig,
    config: &EvalConfig,
) -> Result<Vec<EvalRecord>, HarnessError> {
    spec.validate(vocab)?;
    for (unseen, _) in &spec.links {
        if table.get(unseen).is_none() {
            return Err(HarnessError::Config(format!("no embedding for unseen class `{unseen}`")));
        }
    }
    let rules = spec.rules(base_rules)?;
    evaluate(
        agents,
        policies,
        table,
        &rules,
        env,
        &EvalConfig {
            mode: EvalMode::UnseenClass,
            ..config.clone()
        },
    )
}

/// Proxy pre-training from the experiment's root seed.
pub fn pretrain_agent_init(
    config: &ExperimentConfig,
    vocab: &ClassVocabulary,
    table: &EmbeddingTable,
) -> Result<(PolicyParams, Vec<f64>), HarnessError> {
    let init = PolicyParams::init(table.dim(), &mut derive_rng(config.seed, "pretrain-init", &[]));
    let (params, losses) = pretrain(
        init,
        vocab,
        table,
        config.pretrain.n_batches,
        &config.pretrain.proxy,
        &mut derive_rng(config.seed, "pretrain", &[]),
    )?;
    Ok((params, losses))
}

/// Trains one agent per (spawn model, agent) pair. Agents start from `init`
/// when given, otherwise from their own Glorot draw. `on_episode` receives
/// `(spawn_model_id, agent_id)` along with each episode's statistics.
pub fn train_agents<F>(
    config: &ExperimentConfig,
    table: &EmbeddingTable,
    rules: &SpawnRules,
    init: Option<&PolicyParams>,
    mut on_episode: F,
) -> Result<Vec<(Agent, TrainingCurve)>, HarnessError>
where
    F: FnMut((usize, usize), &EpisodeStats, &PolicyParams),
{
    config.validate()?;
    let mut out = Vec::new();
    for m in 0..config.eval.n_spawn_models {
        for a in 0..config.eval.n_agents_per_model {
            let bundle = training_bundle(config.seed, &config.env.map, rules, m, a)?;
            let params = match init {
                Some(p) => p.clone(),
                None => PolicyParams::init(table.dim(), &mut derive_rng(config.seed, "init", &[m as u64, a as u64])),
            };
            let train_config = TrainConfig {
                seed: derive_seed(config.seed, "train", &[m as u64, a as u64]),
                ..config.train.clone()
            };
            let (params, curve) = train_with(&bundle, table, params, &train_config, |s, p| on_episode((m, a), s, p))?;
            out.push((
                Agent {
                    spawn_model_id: m,
                    agent_id: a,
                    bundle,
                    params,
                },
                curve,
            ));
        }
    }
    Ok(out)
}

/// Embeddings, optional pre-training, training and evaluation of all three
/// policies in `config.eval.mode`.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<Vec<EvalRecord>, HarnessError> {
    config.validate()?;
    let (vocab, table) = config.embeddings.build()?;
    let rules = config.env.rules()?;
    let init = if config.pretrain.n_batches > 0 {
        Some(pretrain_agent_init(config, &vocab, &table)?.0)
    } else {
        None
    };
    let agents: Vec<Agent> = train_agents(config, &table, &rules, init.as_ref(), |_, _, _| {})?
        .into_iter()
        .map(|(a, _)| a)
        .collect();
    let eval = config.eval_config();
    match eval.mode {
        EvalMode::UnseenClass => run_unseen_class_suite(
            &agents,
            &PolicyKind::ALL,
            &config.embeddings.unseen_spec(),
            &vocab,
            &table,
            &rules,
            &config.env.map,
            &eval,
        ),
        _ => evaluate(&agents, &PolicyKind::ALL, &table, &rules, &config.env.map, &eval),
    }
}
