use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::PolicyError;
use crate::embeddings::EmbeddingTable;
use crate::envgen::{GraphMap, NodeId};

/// Node feature matrix `Y` (N × dim). Landmark rows hold the class vector,
/// pose rows are zero. Only the non-zero rows are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    n_nodes: usize,
    rows: Vec<NodeId>,
    values: Array2<f64>,
}

impl NodeFeatures {
    /// Builds features from explicit non-zero rows. `rows` must be strictly
    /// increasing and below `n_nodes`.
    pub fn from_rows(n_nodes: usize, rows: Vec<NodeId>, values: Array2<f64>) -> Self {
        assert_eq!(rows.len(), values.nrows());
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert!(rows.last().is_none_or(|&r| r < n_nodes));
        Self {
            n_nodes,
            rows,
            values,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Ids of the stored (non-zero) rows.
    pub fn rows(&self) -> &[NodeId] {
        &self.rows
    }

    /// Stored rows, aligned with [`NodeFeatures::rows`].
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, node: NodeId) -> Array1<f64> {
        match self.rows.binary_search(&node) {
            Ok(k) => self.values.row(k).to_owned(),
            Err(_) => Array1::zeros(self.dim()),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.n_nodes, self.dim()));
        for (k, &r) in self.rows.iter().enumerate() {
            y.row_mut(r).assign(&self.values.row(k));
        }
        y
    }
}

/// Landmark rows take their class vector; pose rows stay zero.
pub fn build_features(map: &GraphMap, table: &EmbeddingTable) -> Result<NodeFeatures, PolicyError> {
    let dim = table.dim();
    let mut values = Array2::zeros((map.n_landmarks(), dim));
    let mut rows = Vec::with_capacity(map.n_landmarks());
    for (k, (id, class)) in map.landmarks().enumerate() {
        let v = table
            .get(class)
            .ok_or_else(|| PolicyError::MissingEmbedding(class.to_string()))?;
        values.row_mut(k).assign(&ArrayView1::from(v));
        rows.push(id);
    }
    Ok(NodeFeatures {
        n_nodes: map.n_nodes(),
        rows,
        values,
    })
}

/// Sparse `D^-1/2 (A + I) D^-1/2` with degrees taken from `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    row_start: Vec<usize>,
    cols: Vec<NodeId>,
    weights: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_edges(n_nodes: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut nbrs: Vec<Vec<NodeId>> = (0..n_nodes).map(|i| vec![i]).collect();
        for &(a, b) in edges {
            if a != b {
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
        for v in &mut nbrs {
            v.sort_unstable();
            v.dedup();
        }
        let inv_sqrt: Vec<f64> = nbrs.iter().map(|v| 1.0 / (v.len() as f64).sqrt()).collect();
        let mut row_start = Vec::with_capacity(n_nodes + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_start.push(0);
        for (i, v) in nbrs.iter().enumerate() {
            for &j in v {
                cols.push(j);
                weights.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            row_start.push(cols.len());
        }
        Self {
            row_start,
            cols,
            weights,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.row_start.len() - 1
    }

    /// `(column, weight)` entries of row `i`, including the self-loop.
    pub fn row(&self, i: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    /// `self · x` for a dense N × k matrix.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n_nodes());
        let mut out = Array2::zeros(x.raw_dim());
        for (i, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for (j, w) in self.row(i) {
                out_row.scaled_add(w, &x.row(j));
            }
        }
        out
    }

    /// `self · x` where only the rows `rows` of `x` are non-zero; `values`
    /// holds those rows in order.
    pub fn apply_sparse_rows(&self, rows: &[NodeId], values: &Array2<f64>) -> Array2<f64> {
        let n = self.n_nodes();
        let mut out = Array2::zeros((n, values.ncols()));
        // A is symmetric: row r of x contributes w(j, r) · x_r to every
        // neighbour j of r.
        for (k, &r) in rows.iter().enumerate() {
            let xr = values.row(k);
            for (j, w) in self.row(r) {
                out.row_mut(j).scaled_add(w, &xr);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for (j, w) in self.row(i) {
                a[[i, j]] = w;
            }
        }
        a
    }
}

pub fn normalized_adjacency(map: &GraphMap) -> NormalizedAdjacency {
    NormalizedAdjacency::from_edges(map.n_nodes(), map.edges())
}

/// Everything the network needs to know about one map.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub adjacency: NormalizedAdjacency,
    pub features: NodeFeatures,
    /// Nodes that can never be chosen as goals.
    pub landmark_ids: Vec<NodeId>,
}

impl GraphInput {
    pub fn new(map: &GraphMap, table: &EmbeddingTable) -> Result<Self, PolicyError> {
        Ok(Self {
            adjacency: normalized_adjacency(map),
            features: build_features(map, table)?,
            landmark_ids: map.landmark_ids().collect(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n_nodes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{synthetic_embeddings, ClassVocabulary};
    use crate::envgen::RoomType;

    #[test]
    fn isolated_node_has_unit_self_loop() {
        let a = NormalizedAdjacency::from_edges(3, &[(0, 1)]);
        assert_eq!(a.get(2, 2), 1.0);
        assert_eq!(a.get(2, 0), 0.0);
    }

    #[test]
    fn single_edge_gives_halves() {
        let a = NormalizedAdjacency::from_edges(2, &[(0, 1)]).to_dense();
        for x in a.iter() {
            assert!((x - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_is_symmetric_with_unit_eigenvalue() {
        // sqrt(degree) is an eigenvector with eigenvalue 1.
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (5, 1), (5, 2), (6, 0)];
        let a = NormalizedAdjacency::from_edges(7, &edges).to_dense();
        let mut deg = [1.0f64; 7];
        for &(x, y) in &edges {
            deg[x] += 1.0;
            deg[y] += 1.0;
        }
        for i in 0..7 {
            let lhs: f64 = (0..7).map(|j| a[[i, j]] * deg[j].sqrt()).sum();
            assert!((lhs - deg[i].sqrt()).abs() < 1e-12);
            for j in 0..7 {
                assert_eq!(a[[i, j]], a[[j, i]]);
            }
        }
    }

    #[test]
    fn regular_graph_rows_sum_to_one() {
        let ring: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let a = NormalizedAdjacency::from_edges(6, &ring).to_dense();
        for i in 0..6 {
            assert!((a.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_row_product_matches_dense() {
        let edges = [(0, 1), (1, 2), (3, 0), (3, 1), (4, 2)];
        let a = NormalizedAdjacency::from_edges(5, &edges);
        let vals = Array2::from_shape_fn((2, 3), |(i, j)| (i * 3 + j) as f64 - 2.5);
        let y = NodeFeatures::from_rows(5, vec![3, 4], vals.clone());
        let dense = a.to_dense().dot(&y.to_dense());
        let sparse = a.apply_sparse_rows(y.rows(), y.values());
        let via_apply = a.apply(&y.to_dense());
        for ((d, s), p) in dense.iter().zip(sparse.iter()).zip(via_apply.iter()) {
            assert!((d - s).abs() < 1e-14 && (d - p).abs() < 1e-14);
        }
    }

    #[test]
    fn features_follow_node_kind() {
        let vocab = ClassVocabulary::default();
        let table = synthetic_embeddings(&vocab, 1, 16, &[]).unwrap();
        let empty = GraphMap::new(vec![RoomType::Office; 3], vec![], [(0, 1), (1, 2)]).unwrap();
        let f = build_features(&empty, &table).unwrap();
        assert_eq!(f.to_dense().shape(), &[3, 16]);
        assert!(f.to_dense().iter().all(|&x| x == 0.0));

        let map = GraphMap::new(vec![RoomType::Kitchen; 2], vec!["fridge".into()], [(0, 1), (1, 2)]).unwrap();
        let f = build_features(&map, &table).unwrap();
        let y = f.to_dense();
        assert_eq!(y.nrows(), 3);
        assert_eq!(y.row(2).to_vec(), table.get("fridge").unwrap());
        assert!(y.row(0).iter().chain(y.row(1).iter()).all(|&x| x == 0.0));

        let bad = GraphMap::new(vec![RoomType::Kitchen], vec!["toaster".into()], [(0, 1)]).unwrap();
        assert_eq!(
            build_features(&bad, &table),
            Err(PolicyError::MissingEmbedding("toaster".into()))
        );
    }
}
