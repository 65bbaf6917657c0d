//! Undirected attributed graphs stored as adjacency lists.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An undirected graph with per-node feature vectors and an optional class
/// label. Adjacency lists are kept sorted and deduplicated; self loops are
/// rejected at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    features: Vec<Vec<f64>>,
    feat_dim: usize,
    pub label: Option<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges may appear in either or both
    /// orientations and with repeats; the result is symmetrized and deduped.
    pub fn new(
        n: usize,
        edges: &[(usize, usize)],
        features: Vec<Vec<f64>>,
        label: Option<usize>,
    ) -> Result<Self> {
        if features.len() != n {
            return Err(Error::ShapeMismatch {
                context: "node features",
                expected: n,
                got: features.len(),
            });
        }
        let feat_dim = features.first().map(|f| f.len()).unwrap_or(0);
        for f in &features {
            if f.len() != feat_dim {
                return Err(Error::ShapeMismatch {
                    context: "node features",
                    expected: feat_dim,
                    got: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "node features",
                });
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop { node: u });
            }
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            n,
            adj,
            features,
            feat_dim,
            label,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn feat_dim(&self) -> usize {
        self.feat_dim
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn features(&self, v: usize) -> &[f64] {
        &self.features[v]
    }

    pub fn feature_rows(&self) -> &[Vec<f64>] {
        &self.features
    }

    /// Undirected edges with u < v, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Replaces all node features, keeping the topology.
    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<Self> {
        let edges = self.edges();
        Self::new(self.n, &edges, features, self.label)
    }
}

/// Relabels nodes: node `v` of the input becomes node `perm[v]` of the
/// output. `perm` must be a permutation of `0..n`.
pub fn permute_graph(g: &Graph, perm: &[usize]) -> Result<Graph> {
    let n = g.n_nodes();
    if perm.len() != n {
        return Err(Error::InvalidPermutation { n });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation { n });
        }
        seen[p] = true;
    }
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let mut features = vec![Vec::new(); n];
    for v in 0..n {
        features[perm[v]] = g.features(v).to_vec();
    }
    Graph::new(n, &edges, features, g.label)
}
