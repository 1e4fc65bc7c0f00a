use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::Rng;

use super::PolicyError;

/// Width of the graph-convolution output and of the target embedding.
pub const CONV_DIM: usize = 64;
pub const HIDDEN1: usize = 64;
pub const HIDDEN2: usize = 32;

const CHECKPOINT_MAGIC: &str = "graphnav-policy-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Learnable policy weights: the graph-convolution matrix plus three
/// fully connected layers `(128→64), (64→32), (32→1)`.
///
/// Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub theta: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

pub type ParamGrads = PolicyParams;

pub const TENSOR_NAMES: [&str; 7] = ["theta", "w1", "b1", "w2", "b2", "w3", "b3"];

impl PolicyParams {
    pub fn zeros(feature_dim: usize) -> Self {
        Self {
            theta: Array2::zeros((feature_dim, CONV_DIM)),
            w1: Array2::zeros((2 * CONV_DIM, HIDDEN1)),
            b1: Array1::zeros(HIDDEN1),
            w2: Array2::zeros((HIDDEN1, HIDDEN2)),
            b2: Array1::zeros(HIDDEN2),
            w3: Array2::zeros((HIDDEN2, 1)),
            b3: Array1::zeros(1),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(feature_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(feature_dim);
        for w in [&mut p.theta, &mut p.w1, &mut p.w2, &mut p.w3] {
            let (fan_in, fan_out) = w.dim();
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-a..a));
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.feature_dim())
    }

    pub fn feature_dim(&self) -> usize {
        self.theta.nrows()
    }

    /// Flat row-major views of all tensors, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 7] {
        fn s(x: Option<&[f64]>) -> &[f64] {
            x.expect("parameters are in standard layout")
        }
        [
            s(self.theta.as_slice()),
            s(self.w1.as_slice()),
            s(self.b1.as_slice()),
            s(self.w2.as_slice()),
            s(self.b2.as_slice()),
            s(self.w3.as_slice()),
            s(self.b3.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 7] {
        fn s(x: Option<&mut [f64]>) -> &mut [f64] {
            x.expect("parameters are in standard layout")
        }
        [
            s(self.theta.as_slice_mut()),
            s(self.w1.as_slice_mut()),
            s(self.b1.as_slice_mut()),
            s(self.w2.as_slice_mut()),
            s(self.b2.as_slice_mut()),
            s(self.w3.as_slice_mut()),
            s(self.b3.as_slice_mut()),
        ]
    }

    pub fn shapes(&self) -> [(usize, usize); 7] {
        [
            self.theta.dim(),
            self.w1.dim(),
            (1, self.b1.len()),
            self.w2.dim(),
            (1, self.b2.len()),
            self.w3.dim(),
            (1, self.b3.len()),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shapes() == other.shapes()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &Self) {
        assert!(self.same_shape(other));
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Versioned text checkpoint. Values use Rust's shortest round-trip
    /// float formatting, so save/load is bit-exact.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n");
        for ((name, (r, c)), data) in TENSOR_NAMES.iter().zip(self.shapes()).zip(self.tensors()) {
            writeln!(out, "tensor {name} {r} {c}").expect("string write");
            for row in data.chunks(c.max(1)) {
                let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, PolicyError> {
        let bad = |m: String| PolicyError::Checkpoint(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty checkpoint".into()))?;
        let version = header
            .strip_prefix(CHECKPOINT_MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad(format!("not a policy checkpoint: `{header}`")))?;
        if version != CHECKPOINT_VERSION.to_string() {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let mut tensors: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for name in TENSOR_NAMES {
            let head = lines.next().ok_or_else(|| bad(format!("missing tensor {name}")))?;
            let f: Vec<&str> = head.split_whitespace().collect();
            let (r, c) = match f.as_slice() {
                ["tensor", n, r, c] if *n == name => (
                    r.parse::<usize>().map_err(|e| bad(e.to_string()))?,
                    c.parse::<usize>().map_err(|e| bad(e.to_string()))?,
                ),
                _ => return Err(bad(format!("expected header for {name}, got `{head}`"))),
            };
            let mut data = Vec::with_capacity(r * c);
            for _ in 0..r {
                let line = lines.next().ok_or_else(|| bad(format!("{name}: truncated")))?;
                for v in line.split_whitespace() {
                    data.push(v.parse::<f64>().map_err(|_| bad(format!("{name}: bad value `{v}`")))?);
                }
            }
            if data.len() != r * c {
                return Err(bad(format!("{name}: expected {} values, got {}", r * c, data.len())));
            }
            tensors.push((r, c, data));
        }
        let mut it = tensors.into_iter();
        let mut mat = || {
            let (r, c, d) = it.next().expect("seven tensors");
            Array2::from_shape_vec((r, c), d).map_err(|e| bad(e.to_string()))
        };
        let theta = mat()?;
        let w1 = mat()?;
        let b1 = mat()?.into_shape_with_order(HIDDEN1).map_err(|e| bad(e.to_string()))?;
        let w2 = mat()?;
        let b2 = mat()?.into_shape_with_order(HIDDEN2).map_err(|e| bad(e.to_string()))?;
        let w3 = mat()?;
        let b3 = mat()?.into_shape_with_order(1).map_err(|e| bad(e.to_string()))?;
        let p = Self {
            theta,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        };
        if !p.same_shape(&Self::zeros(p.feature_dim())) || p.theta.ncols() != CONV_DIM {
            return Err(bad("tensor shapes do not match the network layout".into()));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn shapes_match_layout() {
        let p = PolicyParams::init(300, &mut rng_from_seed(0));
        assert_eq!(
            p.shapes(),
            [(300, 64), (128, 64), (1, 64), (64, 32), (1, 32), (32, 1), (1, 1)]
        );
        assert!(p.b1.iter().all(|&x| x == 0.0));
        let bound = (6.0f64 / (300.0 + 64.0)).sqrt();
        assert!(p.theta.iter().all(|x| x.abs() <= bound));
        assert!(p.is_finite());
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(PolicyParams::from_checkpoint("").is_err());
        assert!(PolicyParams::from_checkpoint("graphnav-policy-checkpoint 2\n").is_err());
        let good = PolicyParams::zeros(4).to_checkpoint();
        let truncated: String = good.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(PolicyParams::from_checkpoint(&truncated).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn checkpoint_round_trips_bit_exactly(seed in any::<u64>(), dim in 1usize..12, scale in -1e6f64..1e6) {
            let mut p = PolicyParams::init(dim, &mut rng_from_seed(seed));
            p.b1[3] = scale;
            p.b3[0] = -0.0;
            let text = p.to_checkpoint();
            let q = PolicyParams::from_checkpoint(&text).unwrap();
            for (a, b) in p.tensors().iter().zip(q.tensors()) {
                prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            prop_assert_eq!(q.to_checkpoint(), text);
        }
    }
}
