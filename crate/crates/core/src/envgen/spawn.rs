use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::EnvError;

const DEFAULT_RULES: &str = include_str!("../../data/spawn_pairs.txt");

pub const MIN_SPAWN_PROB: f64 = 0.1;
pub const MAX_SPAWN_PROB: f64 = 0.9;

/// The allowed-pair relation: which target classes may spawn next to which
/// map classes. Constant across environments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpawnRules {
    pairs: BTreeSet<(String, String)>,
}

impl SpawnRules {
    /// The household table shipped with the crate (60 pairs, 20 targets).
    pub fn household() -> Self {
        Self::parse(DEFAULT_RULES).expect("bundled spawn table parses")
    }

    /// Parses `map-class -> target-class` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut pairs = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (map, target) = line.split_once("->").ok_or_else(|| EnvError::Parse {
                line: i + 1,
                reason: format!("expected `map-class -> target-class`, got `{line}`"),
            })?;
            let (map, target) = (map.trim().to_lowercase(), target.trim().to_lowercase());
            if map.is_empty() || target.is_empty() || map.contains(char::is_whitespace) || target.contains(char::is_whitespace)
            {
                return Err(EnvError::Parse {
                    line: i + 1,
                    reason: format!("bad class names in `{line}`"),
                });
            }
            pairs.insert((map, target));
        }
        Ok(Self { pairs })
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(a, b)| (a.into().to_lowercase(), b.into().to_lowercase()))
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(m, t)| format!("{m} -> {t}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn allows(&self, map_class: &str, target: &str) -> bool {
        self.pairs.contains(&(map_class.to_string(), target.to_string()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(m, t)| (m.as_str(), t.as_str()))
    }

    pub fn target_classes(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(_, t)| t.as_str()).collect()
    }

    /// Map classes that can host at least one target.
    pub fn map_classes(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(m, _)| m.as_str()).collect()
    }

    pub fn map_classes_for<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.pairs.iter().filter(move |(_, t)| t == target).map(|(m, _)| m.as_str())
    }

    /// Rules for new target classes that copy the spawn locations of an
    /// existing one. Only the new classes appear in the result.
    pub fn inherit(&self, links: &[(String, String)]) -> Result<Self, EnvError> {
        let mut pairs = BTreeSet::new();
        for (new_class, anchor) in links {
            let hosts: Vec<&str> = self.map_classes_for(anchor).collect();
            if hosts.is_empty() {
                return Err(EnvError::Invalid(format!("anchor `{anchor}` has no spawn pairs")));
            }
            for h in hosts {
                pairs.insert((h.to_string(), new_class.to_lowercase()));
            }
        }
        Ok(Self { pairs })
    }
}

/// A hidden spawn model: a probability in [0.1, 0.9] for every allowed
/// pair, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpawnModel {
    rules: SpawnRules,
    prob: BTreeMap<(String, String), f64>,
    by_map_class: BTreeMap<String, Vec<(String, f64)>>,
}

impl SpawnModel {
    /// Builds a model from explicit probabilities. Every allowed pair needs
    /// a value in [0, 1]; no other pair may have one.
    pub fn from_probabilities(
        rules: SpawnRules,
        prob: BTreeMap<(String, String), f64>,
    ) -> Result<Self, EnvError> {
        for (pair, p) in &prob {
            if !rules.pairs.contains(pair) {
                return Err(EnvError::Invalid(format!("probability for disallowed pair {pair:?}")));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(EnvError::Invalid(format!("probability {p} for {pair:?} outside [0, 1]")));
            }
        }
        if let Some(missing) = rules.pairs.iter().find(|p| !prob.contains_key(*p)) {
            return Err(EnvError::Invalid(format!("no probability for allowed pair {missing:?}")));
        }
        let mut by_map_class: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for ((m, t), p) in &prob {
            by_map_class.entry(m.clone()).or_default().push((t.clone(), *p));
        }
        Ok(Self {
            rules,
            prob,
            by_map_class,
        })
    }

    /// Same relation, every allowed pair set to `p`.
    pub fn uniform(rules: SpawnRules, p: f64) -> Result<Self, EnvError> {
        let prob = rules.pairs.iter().map(|k| (k.clone(), p)).collect();
        Self::from_probabilities(rules, prob)
    }

    pub fn rules(&self) -> &SpawnRules {
        &self.rules
    }

    /// `P(target | map_class)`; zero for pairs outside the relation.
    pub fn prob(&self, map_class: &str, target: &str) -> f64 {
        self.by_map_class
            .get(map_class)
            .and_then(|v| v.iter().find(|(t, _)| t == target))
            .map_or(0.0, |(_, p)| *p)
    }

    /// Targets that may spawn next to `map_class`, with probabilities, in
    /// lexicographic target order.
    pub fn targets_for(&self, map_class: &str) -> &[(String, f64)] {
        self.by_map_class.get(map_class).map_or(&[], Vec::as_slice)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = ((&str, &str), f64)> {
        self.prob.iter().map(|((m, t), p)| ((m.as_str(), t.as_str()), *p))
    }

    /// Target classes covered by the relation.
    pub fn target_classes(&self) -> Vec<String> {
        self.rules.target_classes().into_iter().map(str::to_string).collect()
    }

    /// Applies `f` to every probability, keeping the relation.
    pub fn map_probabilities(&self, f: impl Fn(f64) -> f64) -> Result<Self, EnvError> {
        let prob = self.prob.iter().map(|(k, p)| (k.clone(), f(*p))).collect();
        Self::from_probabilities(self.rules.clone(), prob)
    }

    /// `spawn <map-class> <target-class> <probability>` per line.
    pub fn to_text(&self) -> String {
        self.prob
            .iter()
            .map(|((m, t), p)| format!("spawn {m} {t} {p}\n"))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self, EnvError> {
        let mut prob = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let err = |reason: String| EnvError::Parse { line: i + 1, reason };
            match f.as_slice() {
                ["spawn", m, t, p] => {
                    let p: f64 = p.parse().map_err(|_| err(format!("bad probability `{p}`")))?;
                    prob.insert((m.to_string(), t.to_string()), p);
                }
                _ => return Err(err(format!("unrecognised line `{line}`"))),
            }
        }
        let rules = SpawnRules {
            pairs: prob.keys().cloned().collect(),
        };
        Self::from_probabilities(rules, prob)
    }
}

/// Draws an independent `Uniform(0.1, 0.9)` probability for every allowed
/// pair, in lexicographic pair order.
pub fn sample_spawn_model<R: Rng + ?Sized>(rules: &SpawnRules, rng: &mut R) -> SpawnModel {
    assert!(!rules.is_empty(), "spawn relation must not be empty");
    let prob = rules
        .pairs
        .iter()
        .map(|k| (k.clone(), rng.random_range(MIN_SPAWN_PROB..MAX_SPAWN_PROB)))
        .collect();
    SpawnModel::from_probabilities(rules.clone(), prob).expect("sampled values are valid")
}
