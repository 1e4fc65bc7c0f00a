use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::embeddings::{load_embeddings, synthetic_embeddings, ClassVocabulary, EmbeddingTable, SimilarityLink, DEFAULT_DIM};
use crate::envgen::{MapConfig, SpawnRules};
use crate::seed::derive_seed;
use crate::training::{ProxyConfig, TrainConfig};

/// Where the evaluation maps and spawn models come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// The agent's own training map and spawn model.
    TrainEnv,
    /// Fresh maps and freshly sampled spawn probabilities, same allowed pairs.
    UnseenEnv,
    /// Fresh maps; only unseen classes spawn, on pairs inherited from their
    /// anchors.
    UnseenClass,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::TrainEnv => "train-env",
            EvalMode::UnseenEnv => "unseen-env",
            EvalMode::UnseenClass => "unseen-class",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train-env" => Ok(EvalMode::TrainEnv),
            "unseen-env" => Ok(EvalMode::UnseenEnv),
            "unseen-class" => Ok(EvalMode::UnseenClass),
            other => Err(HarnessError::Config(format!("unknown eval mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_spawn_models: usize,
    pub n_agents_per_model: usize,
    pub n_maps_per_agent: usize,
    pub n_targets_per_map: usize,
    pub budget: usize,
    pub mode: EvalMode,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_spawn_models: 20,
            n_agents_per_model: 10,
            n_maps_per_agent: 100,
            n_targets_per_map: 10,
            budget: 10,
            mode: EvalMode::UnseenEnv,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let counts = [
            ("n_spawn_models", self.n_spawn_models),
            ("n_agents_per_model", self.n_agents_per_model),
            ("n_maps_per_agent", self.n_maps_per_agent),
            ("n_targets_per_map", self.n_targets_per_map),
            ("budget", self.budget),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(HarnessError::Config(format!("eval.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// An unseen class, the seen target class it borrows spawn pairs from, and
/// how its synthetic vector is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnseenClassEntry {
    pub class: String,
    pub anchor: String,
    /// Noise added to the anchor vector for synthetic embeddings.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    /// Use a vector orthogonal to every known class instead of the anchor.
    #[serde(default)]
    pub orthogonal: bool,
}

fn default_noise_scale() -> f64 {
    0.1
}

impl UnseenClassEntry {
    pub fn anchored(class: &str, anchor: &str, noise_scale: f64) -> Self {
        Self {
            class: class.to_string(),
            anchor: anchor.to_string(),
            noise_scale,
            orthogonal: false,
        }
    }

    pub fn orthogonal(class: &str, anchor: &str) -> Self {
        Self {
            class: class.to_string(),
            anchor: anchor.to_string(),
            noise_scale: 0.0,
            orthogonal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingsConfig {
    /// Word-vector text file. Synthetic vectors are used when absent.
    pub path: Option<PathBuf>,
    pub dim: usize,
    pub seed: u64,
    pub unseen: Vec<UnseenClassEntry>,
}

impl Default for EmbeddingsConfig {
    fn default() -> Self {
        Self {
            path: None,
            dim: DEFAULT_DIM,
            seed: 0,
            unseen: vec![
                UnseenClassEntry::anchored("butter", "milk", 0.1),
                UnseenClassEntry::anchored("yoghurt", "milk", 0.1),
                UnseenClassEntry::orthogonal("cellphone", "keys"),
            ],
        }
    }
}

impl EmbeddingsConfig {
    /// Default map and target classes plus the configured unseen classes.
    pub fn vocabulary(&self) -> Result<ClassVocabulary, HarnessError> {
        let base = ClassVocabulary::default();
        let unseen: Vec<String> = self.unseen.iter().map(|u| u.class.to_lowercase()).collect();
        Ok(ClassVocabulary::new(
            base.map_classes().to_vec(),
            base.target_classes().to_vec(),
            unseen,
        )?)
    }

    pub fn build(&self) -> Result<(ClassVocabulary, EmbeddingTable), HarnessError> {
        let vocab = self.vocabulary()?;
        let table = match &self.path {
            Some(path) => {
                let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
                load_embeddings(BufReader::new(file), &vocab, self.dim)?
            }
            None => {
                let links: Vec<SimilarityLink> = self
                    .unseen
                    .iter()
                    .filter(|u| !u.orthogonal)
                    .map(|u| SimilarityLink::new(&u.class, &u.anchor, u.noise_scale))
                    .collect();
                let mut table = synthetic_embeddings(&vocab, self.seed, self.dim, &links)?;
                for u in self.unseen.iter().filter(|u| u.orthogonal) {
                    table.insert_orthogonal(&u.class, self.seed)?;
                }
                table
            }
        };
        Ok((vocab, table))
    }

    pub fn unseen_spec(&self) -> UnseenClassSpec {
        UnseenClassSpec {
            links: self
                .unseen
                .iter()
                .map(|u| (u.class.to_lowercase(), u.anchor.to_lowercase()))
                .collect(),
        }
    }
}

/// Unseen classes paired with the seen target class whose allowed spawn
/// pairs they inherit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnseenClassSpec {
    pub links: Vec<(String, String)>,
}

impl Default for UnseenClassSpec {
    fn default() -> Self {
        EmbeddingsConfig::default().unseen_spec()
    }
}

impl UnseenClassSpec {
    /// Anchors must be seen target classes; unseen names must not be.
    pub fn validate(&self, vocab: &ClassVocabulary) -> Result<(), HarnessError> {
        for (unseen, anchor) in &self.links {
            if !vocab.target_classes().contains(anchor) {
                return Err(HarnessError::Config(format!("anchor `{anchor}` is not a seen target class")));
            }
            if vocab.seen().any(|c| c == unseen) {
                return Err(HarnessError::Config(format!("`{unseen}` is already a training class")));
            }
        }
        Ok(())
    }

    /// Allowed pairs for the unseen classes only.
    pub fn rules(&self, base: &SpawnRules) -> Result<SpawnRules, HarnessError> {
        Ok(base.inherit(&self.links)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    #[serde(flatten)]
    pub map: MapConfig,
    /// Allowed-pair file (`map-class -> target-class` lines). The built-in
    /// household relation is used when absent.
    pub spawn_pairs: Option<PathBuf>,
}

impl EnvConfig {
    pub fn rules(&self) -> Result<SpawnRules, HarnessError> {
        match &self.spawn_pairs {
            None => Ok(SpawnRules::household()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                Ok(SpawnRules::parse(&text)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub n_batches: usize,
    #[serde(flatten)]
    pub proxy: ProxyConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            n_batches: 2000,
            proxy: ProxyConfig::default(),
        }
    }
}

/// Everything one experiment needs. Serialised with sections `env`,
/// `embeddings`, `pretrain`, `train` and `eval`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Root seed; every map, model, agent and episode seed derives from it.
    pub seed: u64,
    pub env: EnvConfig,
    pub embeddings: EmbeddingsConfig,
    pub pretrain: PretrainConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    /// Write a checkpoint every this many training episodes (0 = only at
    /// the end).
    pub checkpoint_every: usize,
}

impl ExperimentConfig {
    /// Small maps and short runs.
    pub fn desk() -> Self {
        Self {
            env: EnvConfig {
                map: MapConfig::desk(),
                spawn_pairs: None,
            },
            train: TrainConfig {
                n_episodes: 5000,
                ..TrainConfig::default()
            },
            eval: EvalConfig {
                n_spawn_models: 1,
                n_agents_per_model: 1,
                n_maps_per_agent: 100,
                ..EvalConfig::default()
            },
            ..Self::default()
        }
    }

    /// The evaluation settings with `eval.seed` mixed into the root seed, so
    /// one root seed fixes every evaluation episode as well.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: derive_seed(self.seed, "eval", &[self.eval.seed]),
            ..self.eval.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.train.validate()?;
        self.eval.validate()?;
        let m = &self.env.map;
        if m.n_poses == 0 || m.objects_min == 0 || m.objects_max < m.objects_min {
            return Err(HarnessError::Config("env: need n_poses >= 1 and 1 <= objects_min <= objects_max".into()));
        }
        if !(0.0..=1.0).contains(&m.room_persistence) || !(0.0..1.0).contains(&m.visibility_continuation) {
            return Err(HarnessError::Config("env: probabilities out of range".into()));
        }
        if self.embeddings.dim == 0 {
            return Err(HarnessError::Config("embeddings.dim must be positive".into()));
        }
        Ok(())
    }
}
