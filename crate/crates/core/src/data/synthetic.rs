//! Generated datasets and exhaustive small-graph enumeration.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;

use super::tu::{RawGraph, RawTu};
use super::{preprocess, Dataset, FeatureKind};

/// Available generated classification tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticTask {
    /// Class 0 is a plain cycle, class 1 a cycle with one chord.
    CycleVsChord,
    /// Two-community graphs whose node attributes either agree between the
    /// communities (class 0) or split them (class 1).
    TwoCommunityAttr,
}

impl SyntheticTask {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticTask::CycleVsChord => "cycle-vs-chord",
            SyntheticTask::TwoCommunityAttr => "two-community-attr",
        }
    }
}

impl std::fmt::Display for SyntheticTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SyntheticTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle-vs-chord" => Ok(SyntheticTask::CycleVsChord),
            "two-community-attr" => Ok(SyntheticTask::TwoCommunityAttr),
            other => Err(Error::Config(format!(
                "unknown synthetic task {other:?}; expected cycle-vs-chord or two-community-attr"
            ))),
        }
    }
}

fn cycle_edges(m: usize) -> Vec<(usize, usize)> {
    (0..m).map(|i| (i, (i + 1) % m)).collect()
}

/// Cycle-versus-chord task in raw TU form. Sizes are drawn uniformly from
/// `size_min..=size_max` and classes alternate, so the labels are balanced.
pub fn gen_cycle_vs_chord_raw(
    n_graphs: usize,
    size_min: usize,
    size_max: usize,
    rng: &mut Rng,
) -> Result<RawTu> {
    if size_min < 4 {
        return Err(Error::Config(
            "cycle-vs-chord needs at least 4 nodes per graph (a chord on a smaller cycle \
             duplicates an edge)"
                .into(),
        ));
    }
    if size_max < size_min {
        return Err(Error::Config("size_max must be at least size_min".into()));
    }
    if n_graphs < 2 {
        return Err(Error::Config("need at least two graphs".into()));
    }
    let mut graphs = Vec::with_capacity(n_graphs);
    let mut labels = Vec::with_capacity(n_graphs);
    for i in 0..n_graphs {
        let m = size_min + rng.below(size_max - size_min + 1);
        let mut edges = cycle_edges(m);
        let class = i % 2;
        if class == 1 {
            // Chord endpoints at cycle distance >= 2 in both directions.
            let u = rng.below(m);
            let offset = 2 + rng.below(m - 3);
            edges.push((u, (u + offset) % m));
        }
        graphs.push(RawGraph {
            n_nodes: m,
            edges,
            node_labels: None,
            node_attrs: None,
        });
        labels.push(class as i64);
    }
    Ok(RawTu {
        name: "cycle-vs-chord".into(),
        graphs,
        graph_labels: labels,
    })
}

/// Two-community task in raw TU form. Each graph splits its nodes into two
/// dense halves joined sparsely; class 0 gives both halves the same
/// attribute mean, class 1 separates them. Expected attribute sums match
/// across classes, so the sign structure has to be read per community.
pub fn gen_two_community_raw(
    n_graphs: usize,
    size_min: usize,
    size_max: usize,
    rng: &mut Rng,
) -> Result<RawTu> {
    if size_min < 4 {
        return Err(Error::Config(
            "two-community-attr needs at least 4 nodes per graph".into(),
        ));
    }
    if size_max < size_min {
        return Err(Error::Config("size_max must be at least size_min".into()));
    }
    if n_graphs < 2 {
        return Err(Error::Config("need at least two graphs".into()));
    }
    let mut graphs = Vec::with_capacity(n_graphs);
    let mut labels = Vec::with_capacity(n_graphs);
    for i in 0..n_graphs {
        let n = size_min + rng.below(size_max - size_min + 1);
        let half = n / 2;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let same = (u < half) == (v < half);
                let p = if same { 0.8 } else { 0.1 };
                if rng.uniform() < p {
                    edges.push((u, v));
                }
            }
        }
        let class = i % 2;
        let attrs: Vec<Vec<f64>> = (0..n)
            .map(|v| {
                let mean = if class == 0 {
                    0.5
                } else if v < half {
                    1.5
                } else {
                    -0.5
                };
                vec![mean + 0.25 * rng.normal()]
            })
            .collect();
        graphs.push(RawGraph {
            n_nodes: n,
            edges,
            node_labels: None,
            node_attrs: Some(attrs),
        });
        labels.push(class as i64);
    }
    Ok(RawTu {
        name: "two-community-attr".into(),
        graphs,
        graph_labels: labels,
    })
}

/// Generates and preprocesses a synthetic dataset.
pub fn gen_synthetic(
    task: SyntheticTask,
    n_graphs: usize,
    size_min: usize,
    size_max: usize,
    rng: &mut Rng,
) -> Result<Dataset> {
    match task {
        SyntheticTask::CycleVsChord => {
            let raw = gen_cycle_vs_chord_raw(n_graphs, size_min, size_max, rng)?;
            preprocess(&raw, FeatureKind::AllOnes)
        }
        SyntheticTask::TwoCommunityAttr => {
            let raw = gen_two_community_raw(n_graphs, size_min, size_max, rng)?;
            preprocess(&raw, FeatureKind::ContinuousPlusOneHot)
        }
    }
}

/// Erdos-Renyi graph with standard-normal features.
pub fn random_graph(n: usize, p: f64, feat_dim: usize, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.uniform() < p {
                edges.push((u, v));
            }
        }
    }
    let feats = (0..n)
        .map(|_| (0..feat_dim).map(|_| rng.normal()).collect())
        .collect();
    Graph::new(n, &edges, feats, None).expect("generated edges are valid")
}

fn connected(n: usize, pairs: &[(usize, usize)], mask: u64) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    let mut parts = n;
    for (b, &(u, v)) in pairs.iter().enumerate() {
        if mask >> b & 1 == 1 {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
                parts -= 1;
            }
        }
    }
    parts == 1
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k % 2 == 0 {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut cur, &mut out);
    out
}

/// All connected simple graphs on `n` unlabeled nodes (up to isomorphism),
/// with constant feature `[1.0]` at every node. The counts for n = 1..6 are
/// 1, 1, 2, 6, 21, 112.
pub fn enumerate_connected_graphs(n: usize) -> Result<Vec<Graph>> {
    if n == 0 || n > 6 {
        return Err(Error::Config(
            "connected-graph enumeration covers 1 to 6 nodes".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let mut pair_idx = vec![vec![0usize; n]; n];
    for (b, &(u, v)) in pairs.iter().enumerate() {
        pair_idx[u][v] = b;
        pair_idx[v][u] = b;
    }
    let perms = permutations(n);
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        if !connected(n, &pairs, mask) {
            continue;
        }
        // Keep only the lexicographically smallest relabeling.
        let canonical = perms
            .iter()
            .map(|perm| {
                let mut m = 0u64;
                for (b, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        m |= 1 << pair_idx[perm[u]][perm[v]];
                    }
                }
                m
            })
            .min()
            .expect("at least the identity permutation");
        if canonical != mask {
            continue;
        }
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        out.push(Graph::new(n, &edges, vec![vec![1.0]; n], None)?);
    }
    Ok(out)
}

/// The triangular prism and the complete bipartite graph on 3 + 3 nodes:
/// both 3-regular on six nodes, not isomorphic, and indistinguishable by
/// color refinement.
pub fn wl_blind_pair() -> (Graph, Graph) {
    let feats = vec![vec![1.0]; 6];
    let prism = Graph::new(
        6,
        &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
        feats.clone(),
        None,
    )
    .expect("valid prism");
    let k33 = Graph::new(
        6,
        &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)],
        feats,
        None,
    )
    .expect("valid bipartite graph");
    (prism, k33)
}
