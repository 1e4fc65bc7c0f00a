//! Semantic class vectors.
//!
//! Landmarks and targets are described by fixed word vectors. Vectors come
//! either from a word2vec-style text export (e.g. FastText) or from a seeded
//! synthetic generator that needs no external files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::seed::{derive_rng, fnv1a};

pub const DEFAULT_DIM: usize = 300;

/// Static classes that appear as landmarks in generated maps.
pub const DEFAULT_MAP_CLASSES: [&str; 17] = [
    "bed",
    "bedside",
    "wardrobe",
    "cabinet",
    "chair",
    "kitchen-table",
    "fridge",
    "microwave",
    "drawers",
    "oven",
    "benchtop",
    "sofa",
    "armchair",
    "tv",
    "dining-table",
    "desk",
    "shelf",
];

/// Movable classes the agent is asked to find.
pub const DEFAULT_TARGET_CLASSES: [&str; 20] = [
    "knife", "fork", "spoon", "bowl", "cup", "glass", "milk", "beer", "apple", "juice", "oranges",
    "pillow", "t-shirt", "pants", "jacket", "socks", "glasses", "keys", "book", "remote",
];

/// Held-out classes used by the unseen-class experiments.
pub const DEFAULT_UNSEEN_CLASSES: [&str; 3] = ["butter", "yoghurt", "cellphone"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("no vector for class `{0}` (neither the token nor all of its component words were found)")]
    MissingToken(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("anchor class `{0}` is not part of the vocabulary")]
    UnknownAnchor(String),
    #[error("class `{0}` resolved to the zero vector")]
    ZeroVector(String),
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("vocabulary overlap: `{0}` is listed in more than one class set")]
    Overlap(String),
    #[error("cannot build a vector orthogonal to {0} existing vectors in {1} dimensions")]
    NoOrthogonalComplement(usize, usize),
    #[error("io error: {0}")]
    Io(String),
}

/// The three disjoint class lists used by an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVocabulary {
    map_classes: Vec<String>,
    target_classes: Vec<String>,
    unseen_classes: Vec<String>,
}

impl Default for ClassVocabulary {
    fn default() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self::new(
            own(&DEFAULT_MAP_CLASSES),
            own(&DEFAULT_TARGET_CLASSES),
            own(&DEFAULT_UNSEEN_CLASSES),
        )
        .expect("default vocabulary is disjoint")
    }
}

impl ClassVocabulary {
    /// Builds a vocabulary, lower-casing every name. The three lists must
    /// be pairwise disjoint and free of duplicates.
    pub fn new(
        map_classes: Vec<String>,
        target_classes: Vec<String>,
        unseen_classes: Vec<String>,
    ) -> Result<Self, EmbeddingError> {
        let lower = |v: Vec<String>| v.into_iter().map(|s| s.to_lowercase()).collect::<Vec<_>>();
        let vocab = Self {
            map_classes: lower(map_classes),
            target_classes: lower(target_classes),
            unseen_classes: lower(unseen_classes),
        };
        let mut seen = BTreeSet::new();
        for c in vocab.all() {
            if !seen.insert(c) {
                return Err(EmbeddingError::Overlap(c.to_string()));
            }
        }
        Ok(vocab)
    }

    pub fn map_classes(&self) -> &[String] {
        &self.map_classes
    }

    pub fn target_classes(&self) -> &[String] {
        &self.target_classes
    }

    pub fn unseen_classes(&self) -> &[String] {
        &self.unseen_classes
    }

    /// Map classes followed by target classes.
    pub fn seen(&self) -> impl Iterator<Item = &str> {
        self.map_classes
            .iter()
            .chain(self.target_classes.iter())
            .map(String::as_str)
    }

    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.seen().chain(self.unseen_classes.iter().map(String::as_str))
    }

    pub fn contains(&self, class: &str) -> bool {
        let class = class.to_lowercase();
        self.all().any(|c| c == class)
    }

    /// Returns a copy with `extra` appended to the unseen list.
    pub fn with_unseen(&self, extra: &[String]) -> Result<Self, EmbeddingError> {
        let mut unseen = self.unseen_classes.clone();
        for e in extra {
            let e = e.to_lowercase();
            if !unseen.contains(&e) {
                unseen.push(e);
            }
        }
        Self::new(self.map_classes.clone(), self.target_classes.clone(), unseen)
    }
}

/// Immutable lookup from class name to vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, class: &str) -> Option<&[f64]> {
        self.vectors.get(&class.to_lowercase()).map(Vec::as_slice)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Adds or replaces a vector.
    pub fn insert(&mut self, class: &str, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::LengthMismatch(vector.len(), self.dim));
        }
        if vector.iter().all(|&x| x == 0.0) {
            return Err(EmbeddingError::ZeroVector(class.to_string()));
        }
        self.vectors.insert(class.to_lowercase(), vector);
        Ok(())
    }

    /// Inserts a unit vector for `class` that is exactly orthogonal to every
    /// vector currently in the table. Models a class with no semantic
    /// neighbour among the known ones.
    pub fn insert_orthogonal(&mut self, class: &str, seed: u64) -> Result<(), EmbeddingError> {
        let key = class.to_lowercase();
        let basis: Vec<&Vec<f64>> = self
            .vectors
            .iter()
            .filter(|(k, _)| **k != key)
            .map(|(_, v)| v)
            .collect();
        if basis.len() >= self.dim {
            return Err(EmbeddingError::NoOrthogonalComplement(basis.len(), self.dim));
        }
        // Modified Gram-Schmidt over the existing vectors.
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
        for v in basis {
            let mut u = v.clone();
            for q in &ortho {
                let d = dot(&u, q);
                u.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
            let n = norm(&u);
            if n > 1e-10 {
                u.iter_mut().for_each(|a| *a /= n);
                ortho.push(u);
            }
        }
        let mut rng = derive_rng(seed, "orthogonal", &[fnv1a(key.as_bytes())]);
        loop {
            let mut u = gaussian_vector(&mut rng, self.dim);
            for _ in 0..2 {
                for q in &ortho {
                    let d = dot(&u, q);
                    u.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                }
            }
            let n = norm(&u);
            if n > 1e-6 {
                u.iter_mut().for_each(|a| *a /= n);
                self.vectors.insert(key, u);
                return Ok(());
            }
        }
    }
}

/// Reads a word2vec text export and resolves every vocabulary class.
///
/// The optional header `<count> <dim>` is recognised when the first line
/// holds exactly two integers. Class names are lower-cased. A class that is
/// not a token itself resolves to the mean of its `-`-separated components.
/// Only lines for needed tokens are parsed numerically; every line is
/// checked for the expected component count.
pub fn load_embeddings<R: BufRead>(
    source: R,
    vocab: &ClassVocabulary,
    dim: usize,
) -> Result<EmbeddingTable, EmbeddingError> {
    let classes: Vec<String> = vocab.all().map(str::to_string).collect();
    let mut needed: BTreeSet<String> = BTreeSet::new();
    for c in &classes {
        needed.insert(c.clone());
        for part in c.split('-').filter(|p| !p.is_empty()) {
            needed.insert(part.to_string());
        }
    }

    let mut found: HashMap<String, Vec<f64>> = HashMap::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| EmbeddingError::Io(e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();
        if idx == 0 && rest.len() == 1 {
            if let (Ok(_), Ok(header_dim)) = (token.parse::<u64>(), rest[0].parse::<usize>()) {
                if header_dim != dim {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: lineno,
                        expected: dim,
                        found: header_dim,
                    });
                }
                continue;
            }
        }
        if rest.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: lineno,
                expected: dim,
                found: rest.len(),
            });
        }
        if !needed.contains(token) || found.contains_key(token) {
            continue;
        }
        let vector = rest
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| EmbeddingError::MalformedLine {
                    line: lineno,
                    reason: format!("cannot parse `{s}` as a number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        found.insert(token.to_string(), vector);
    }

    let mut table = EmbeddingTable::new(dim);
    for class in &classes {
        let vector = if let Some(v) = found.get(class) {
            v.clone()
        } else {
            let parts: Vec<&str> = class.split('-').filter(|p| !p.is_empty()).collect();
            if parts.len() < 2 || parts.iter().any(|p| !found.contains_key(*p)) {
                return Err(EmbeddingError::MissingToken(class.clone()));
            }
            let mut mean = vec![0.0; dim];
            for p in &parts {
                mean.iter_mut().zip(&found[*p]).for_each(|(m, x)| *m += x);
            }
            let k = parts.len() as f64;
            mean.iter_mut().for_each(|m| *m /= k);
            mean
        };
        table.insert(class, vector)?;
    }
    Ok(table)
}

/// Pairs an unseen class with the seen class it should resemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityLink {
    pub unseen: String,
    pub anchor: String,
    /// Expected Euclidean norm of the isotropic noise added to the unit
    /// anchor vector before renormalising.
    pub noise_scale: f64,
}

impl SimilarityLink {
    pub fn new(unseen: &str, anchor: &str, noise_scale: f64) -> Self {
        Self {
            unseen: unseen.to_lowercase(),
            anchor: anchor.to_lowercase(),
            noise_scale,
        }
    }
}

/// Deterministic stand-in for pre-trained word vectors.
///
/// Every vocabulary class gets a unit vector drawn from a Gaussian seeded by
/// `(seed, class-name)`. Each linked unseen class is then replaced by its
/// anchor plus noise with per-component standard deviation
/// `noise_scale / sqrt(dim)`, renormalised.
pub fn synthetic_embeddings(
    vocab: &ClassVocabulary,
    seed: u64,
    dim: usize,
    links: &[SimilarityLink],
) -> Result<EmbeddingTable, EmbeddingError> {
    let mut table = EmbeddingTable::new(dim);
    for class in vocab.all() {
        table.insert(class, seeded_unit_vector(seed, class, dim))?;
    }
    for link in links {
        if !vocab.seen().any(|c| c == link.anchor) {
            return Err(EmbeddingError::UnknownAnchor(link.anchor.clone()));
        }
        assert!(link.noise_scale >= 0.0, "noise scale must be non-negative");
        let anchor = table.get(&link.anchor).expect("anchor inserted above").to_vec();
        if link.noise_scale == 0.0 {
            table.insert(&link.unseen, anchor)?;
            continue;
        }
        let mut rng = derive_rng(seed, "link-noise", &[fnv1a(link.unseen.as_bytes())]);
        let sigma = link.noise_scale / (dim as f64).sqrt();
        let mut v: Vec<f64> = anchor
            .iter()
            .map(|a| {
                let n: f64 = rng.sample(StandardNormal);
                a + sigma * n
            })
            .collect();
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        table.insert(&link.unseen, v)?;
    }
    Ok(table)
}

fn seeded_unit_vector(seed: u64, class: &str, dim: usize) -> Vec<f64> {
    let mut rng = derive_rng(seed, "class-vector", &[fnv1a(class.as_bytes())]);
    loop {
        let mut v = gaussian_vector(&mut rng, dim);
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `u·v / (|u||v|)`, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
