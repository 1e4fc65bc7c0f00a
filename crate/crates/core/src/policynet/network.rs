use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};

use super::graph::{GraphInput, NodeFeatures, NormalizedAdjacency};
use super::params::{ParamGrads, PolicyParams, CONV_DIM};
use super::PolicyError;
use crate::envgen::NodeId;

/// Logit assigned to nodes that must not be chosen.
pub const MASK_LOGIT: f64 = -100.0;

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// `relu(adj · Y · Θ)`; returns `(pre-activation, Z)`.
pub fn graph_convolution_with_pre(
    adj: &NormalizedAdjacency,
    features: &NodeFeatures,
    theta: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let projected = features.values().dot(theta);
    let pre = adj.apply_sparse_rows(features.rows(), &projected);
    let z = relu(&pre);
    (pre, z)
}

/// `Z = relu(D^-1/2 (A+I) D^-1/2 · Y · Θ)`, one row per node.
pub fn graph_convolution(adj: &NormalizedAdjacency, features: &NodeFeatures, theta: &Array2<f64>) -> Array2<f64> {
    graph_convolution_with_pre(adj, features, theta).1
}

/// `relu(y_target · Θ)`.
pub fn target_embedding(y_target: ArrayView1<'_, f64>, theta: &Array2<f64>) -> Array1<f64> {
    y_target.dot(theta).mapv(|v| v.max(0.0))
}

/// Activations of the per-node MLP head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadCache {
    pub h1_pre: Array2<f64>,
    pub h1: Array2<f64>,
    pub h2_pre: Array2<f64>,
    pub h2: Array2<f64>,
}

/// Per-node MLP on `concat(z_i, z_target)`, unmasked.
pub fn head_logits(z: &Array2<f64>, z_target: &Array1<f64>, params: &PolicyParams) -> (Array1<f64>, HeadCache) {
    let w1_node = params.w1.slice(s![..CONV_DIM, ..]);
    let w1_target = params.w1.slice(s![CONV_DIM.., ..]);
    // concat(z_i, z_t) · W1 = z_i · W1[:64] + z_t · W1[64:]
    let shared = z_target.dot(&w1_target) + &params.b1;
    let h1_pre = z.dot(&w1_node) + &shared;
    let h1 = relu(&h1_pre);
    let h2_pre = h1.dot(&params.w2) + &params.b2;
    let h2 = relu(&h2_pre);
    let logits = h2.dot(&params.w3).column(0).to_owned() + params.b3[0];
    (
        logits,
        HeadCache {
            h1_pre,
            h1,
            h2_pre,
            h2,
        },
    )
}

/// Overwrites the logits of `landmark_ids ∪ visited_ids` with
/// [`MASK_LOGIT`].
pub fn apply_mask(logits: &mut Array1<f64>, landmark_ids: &[NodeId], visited_ids: &[NodeId]) {
    for &i in landmark_ids.iter().chain(visited_ids) {
        logits[i] = MASK_LOGIT;
    }
}

/// Head logits with the landmark and visited masks applied.
pub fn policy_logits(
    z: &Array2<f64>,
    z_target: &Array1<f64>,
    params: &PolicyParams,
    landmark_ids: &[NodeId],
    visited_ids: &[NodeId],
) -> (Array1<f64>, HeadCache) {
    let (mut logits, cache) = head_logits(z, z_target, params);
    apply_mask(&mut logits, landmark_ids, visited_ids);
    (logits, cache)
}

/// Cached forward pass for one (map, target) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub conv_pre: Array2<f64>,
    pub z: Array2<f64>,
    pub y_target: Array1<f64>,
    pub target_pre: Array1<f64>,
    pub z_target: Array1<f64>,
    pub head: HeadCache,
    /// Head outputs before any masking.
    pub raw_logits: Array1<f64>,
    /// Logits with landmarks masked.
    pub logits: Array1<f64>,
    landmark_mask: Vec<bool>,
}

impl ForwardTrace {
    pub fn n_nodes(&self) -> usize {
        self.raw_logits.len()
    }

    pub fn is_masked_landmark(&self, node: NodeId) -> bool {
        self.landmark_mask[node]
    }

    /// Landmark-masked logits with `visited` additionally masked.
    pub fn masked_logits(&self, visited: &[NodeId]) -> Array1<f64> {
        let mut p = self.logits.clone();
        for &v in visited {
            p[v] = MASK_LOGIT;
        }
        p
    }
}

/// Full network forward pass. Landmarks are masked in
/// [`ForwardTrace::logits`]; visited-node masks are applied by callers.
pub fn forward(params: &PolicyParams, input: &GraphInput, y_target: ArrayView1<'_, f64>) -> ForwardTrace {
    let (conv_pre, z) = graph_convolution_with_pre(&input.adjacency, &input.features, &params.theta);
    let target_pre = y_target.dot(&params.theta);
    let z_target = target_pre.mapv(|v| v.max(0.0));
    let (raw_logits, head) = head_logits(&z, &z_target, params);
    let mut logits = raw_logits.clone();
    apply_mask(&mut logits, &input.landmark_ids, &[]);
    let mut landmark_mask = vec![false; input.n_nodes()];
    for &l in &input.landmark_ids {
        landmark_mask[l] = true;
    }
    ForwardTrace {
        conv_pre,
        z,
        y_target: y_target.to_owned(),
        target_pre,
        z_target,
        head,
        raw_logits,
        logits,
        landmark_mask,
    }
}

/// Reverse-mode gradients of a scalar loss given `upstream = dL/dlogits`.
///
/// Entries of `upstream` at landmark nodes are ignored: their logits are
/// constants after masking. Callers that mask visited nodes must pass zero
/// upstream for them.
pub fn backward(
    params: &PolicyParams,
    input: &GraphInput,
    trace: &ForwardTrace,
    upstream: &Array1<f64>,
) -> Result<ParamGrads, PolicyError> {
    let n = trace.n_nodes();
    if upstream.len() != n || input.n_nodes() != n || trace.conv_pre.nrows() != n {
        return Err(PolicyError::TraceMismatch(format!(
            "trace has {n} nodes, input {}, upstream {}",
            input.n_nodes(),
            upstream.len()
        )));
    }
    if trace.y_target.len() != params.feature_dim() || input.features.dim() != params.feature_dim() {
        return Err(PolicyError::TraceMismatch("feature dimension differs from parameters".into()));
    }
    let mut g = upstream.clone();
    for (i, gi) in g.iter_mut().enumerate() {
        if trace.landmark_mask[i] {
            *gi = 0.0;
        }
    }
    let mut grads = params.zeros_like();
    let h = &trace.head;

    // fc3
    let g_col = g.view().insert_axis(Axis(1));
    grads.w3.assign(&h.h2.t().dot(&g_col));
    grads.b3[0] = g.sum();
    let mut d_h2_pre = g_col.dot(&params.w3.t());
    Zip::from(&mut d_h2_pre).and(&h.h2_pre).for_each(|d, &x| {
        if x <= 0.0 {
            *d = 0.0
        }
    });

    // fc2
    grads.w2.assign(&h.h1.t().dot(&d_h2_pre));
    grads.b2.assign(&d_h2_pre.sum_axis(Axis(0)));
    let mut d_h1_pre = d_h2_pre.dot(&params.w2.t());
    Zip::from(&mut d_h1_pre).and(&h.h1_pre).for_each(|d, &x| {
        if x <= 0.0 {
            *d = 0.0
        }
    });

    // fc1 over concat(z_i, z_target)
    let d_h1_sum = d_h1_pre.sum_axis(Axis(0));
    grads
        .w1
        .slice_mut(s![..CONV_DIM, ..])
        .assign(&trace.z.t().dot(&d_h1_pre));
    let target_outer = trace
        .z_target
        .view()
        .insert_axis(Axis(1))
        .dot(&d_h1_sum.view().insert_axis(Axis(0)));
    grads.w1.slice_mut(s![CONV_DIM.., ..]).assign(&target_outer);
    grads.b1.assign(&d_h1_sum);

    let mut d_conv_pre = d_h1_pre.dot(&params.w1.slice(s![..CONV_DIM, ..]).t());
    Zip::from(&mut d_conv_pre).and(&trace.conv_pre).for_each(|d, &x| {
        if x <= 0.0 {
            *d = 0.0
        }
    });
    let mut d_target_pre = d_h1_sum.dot(&params.w1.slice(s![CONV_DIM.., ..]).t());
    Zip::from(&mut d_target_pre).and(&trace.target_pre).for_each(|d, &x| {
        if x <= 0.0 {
            *d = 0.0
        }
    });

    // Θ: (adj·Y)ᵀ·dC = Yᵀ·(adj·dC) with adj symmetric; only landmark rows of Y
    // are non-zero.
    let feats = &input.features;
    let mut back = Array2::zeros((feats.rows().len(), CONV_DIM));
    for (k, &r) in feats.rows().iter().enumerate() {
        let mut row = back.row_mut(k);
        for (j, w) in input.adjacency.row(r) {
            row.scaled_add(w, &d_conv_pre.row(j));
        }
    }
    grads.theta.assign(&feats.values().t().dot(&back));
    grads.theta += &trace
        .y_target
        .view()
        .insert_axis(Axis(1))
        .dot(&d_target_pre.view().insert_axis(Axis(0)));
    Ok(grads)
}
