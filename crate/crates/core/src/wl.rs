//! 1-dimensional Weisfeiler–Lehman color refinement.
//!
//! Node colors start from exact initial labels and are refined by replacing
//! each color with a canonical id of (own color, sorted multiset of neighbor
//! colors). Ids come from a shared interning table, so colorings produced
//! against the same table are comparable across graphs. Refinement is exact
//! integer bookkeeping throughout; continuous attributes must be quantized
//! into labels first.

use crate::graph::Graph;
use std::collections::HashMap;

/// Exact initial node label: integer labels use a single entry, quantized
/// feature vectors use one entry per coordinate.
pub type InitLabel = Vec<i64>;

/// Per-iteration color assignments. `iterations[0]` is the coloring induced
/// by the initial labels; each later entry is one refinement step.
#[derive(Debug, Clone)]
pub struct WlColoring {
    pub iterations: Vec<Vec<u32>>,
    pub stabilized: bool,
}

impl WlColoring {
    pub fn final_colors(&self) -> &[u32] {
        self.iterations.last().expect("at least iteration 0")
    }

    /// Sorted multiset of colors at iteration k (clamped to the last
    /// computed iteration once stabilized).
    pub fn histogram(&self, k: usize) -> Vec<u32> {
        let k = k.min(self.iterations.len() - 1);
        let mut h = self.iterations[k].clone();
        h.sort_unstable();
        h
    }
}

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
enum ColorKey {
    Init(InitLabel),
    Refine(u32, Vec<u32>),
}

/// Interning table mapping label/neighborhood signatures to color ids.
/// Fresh ids are handed out in lexicographically sorted signature order per
/// refinement step, so the assignment is independent of node numbering.
#[derive(Default)]
pub struct ColorTable {
    map: HashMap<ColorKey, u32>,
}

impl ColorTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn assign(&mut self, keys: Vec<ColorKey>) -> Vec<u32> {
        let mut fresh: Vec<&ColorKey> = keys
            .iter()
            .filter(|k| !self.map.contains_key(*k))
            .collect();
        fresh.sort();
        fresh.dedup();
        let mut next = self.map.len() as u32;
        let to_insert: Vec<(ColorKey, u32)> = fresh
            .into_iter()
            .map(|k| {
                let pair = (clone_key(k), next);
                next += 1;
                pair
            })
            .collect();
        for (k, id) in to_insert {
            self.map.insert(k, id);
        }
        keys.iter().map(|k| self.map[k]).collect()
    }
}

fn clone_key(k: &ColorKey) -> ColorKey {
    match k {
        ColorKey::Init(l) => ColorKey::Init(l.clone()),
        ColorKey::Refine(c, ns) => ColorKey::Refine(*c, ns.clone()),
    }
}

/// Quantizes node features to 6 decimal places so they can serve as exact
/// initial labels.
pub fn labels_from_features(g: &Graph) -> Vec<InitLabel> {
    (0..g.n_nodes())
        .map(|v| {
            g.features(v)
                .iter()
                .map(|&x| (x * 1e6).round() as i64)
                .collect()
        })
        .collect()
}

fn refine_step(table: &mut ColorTable, graphs: &[(&Graph, &[u32])]) -> Vec<Vec<u32>> {
    let mut keys = Vec::new();
    let mut sizes = Vec::new();
    for (g, colors) in graphs {
        sizes.push(g.n_nodes());
        for v in 0..g.n_nodes() {
            let mut neigh: Vec<u32> = g.neighbors(v).iter().map(|&u| colors[u]).collect();
            neigh.sort_unstable();
            keys.push(ColorKey::Refine(colors[v], neigh));
        }
    }
    let flat = table.assign(keys);
    let mut out = Vec::with_capacity(graphs.len());
    let mut off = 0;
    for n in sizes {
        out.push(flat[off..off + n].to_vec());
        off += n;
    }
    out
}

fn initial_step(table: &mut ColorTable, graphs: &[(&Graph, &[InitLabel])]) -> Vec<Vec<u32>> {
    let mut keys = Vec::new();
    let mut sizes = Vec::new();
    for (g, labels) in graphs {
        assert_eq!(g.n_nodes(), labels.len(), "one label per node");
        sizes.push(g.n_nodes());
        for l in labels.iter() {
            keys.push(ColorKey::Init(l.clone()));
        }
    }
    let flat = table.assign(keys);
    let mut out = Vec::with_capacity(graphs.len());
    let mut off = 0;
    for n in sizes {
        out.push(flat[off..off + n].to_vec());
        off += n;
    }
    out
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Refines one graph for up to `k_max` iterations, stopping early once the
/// node partition stops changing. Passing a shared `table` keeps colors
/// comparable with other refinements performed against it.
pub fn wl_refine_with(
    table: &mut ColorTable,
    g: &Graph,
    initial_labels: &[InitLabel],
    k_max: usize,
) -> WlColoring {
    let mut iterations = vec![initial_step(table, &[(g, initial_labels)]).remove(0)];
    let mut stabilized = false;
    for _ in 0..k_max {
        let prev = iterations.last().unwrap();
        let next = refine_step(table, &[(g, prev)]).remove(0);
        // a refinement step splits classes or leaves the partition intact;
        // an unchanged class count means it is intact, i.e. stable
        let stable = distinct(&next) == distinct(prev);
        iterations.push(next);
        if stable {
            stabilized = true;
            break;
        }
    }
    WlColoring {
        iterations,
        stabilized,
    }
}

/// [`wl_refine_with`] against a fresh table.
pub fn wl_refine(g: &Graph, initial_labels: &[InitLabel], k_max: usize) -> WlColoring {
    wl_refine_with(&mut ColorTable::new(), g, initial_labels, k_max)
}

/// Refines two graphs in lock step over one shared table so their colors
/// can be compared iteration by iteration.
pub fn wl_refine_pair(
    g1: &Graph,
    labels1: &[InitLabel],
    g2: &Graph,
    labels2: &[InitLabel],
    k_max: usize,
) -> (WlColoring, WlColoring) {
    let mut table = ColorTable::new();
    let init = initial_step(&mut table, &[(g1, labels1), (g2, labels2)]);
    let mut it1 = vec![init[0].clone()];
    let mut it2 = vec![init[1].clone()];
    let mut stabilized = false;
    for _ in 0..k_max {
        let (p1, p2) = (it1.last().unwrap(), it2.last().unwrap());
        let joint_prev = distinct(&[p1.as_slice(), p2.as_slice()].concat());
        let next = refine_step(&mut table, &[(g1, p1), (g2, p2)]);
        let joint_next = distinct(&[next[0].as_slice(), next[1].as_slice()].concat());
        let stable = joint_next == joint_prev;
        it1.push(next[0].clone());
        it2.push(next[1].clone());
        if stable {
            stabilized = true;
            break;
        }
    }
    (
        WlColoring {
            iterations: it1,
            stabilized,
        },
        WlColoring {
            iterations: it2,
            stabilized,
        },
    )
}

/// First iteration k ≤ k_max at which the color histograms of the two
/// graphs differ, or None when refinement cannot tell them apart. Initial
/// labels are the quantized node features.
pub fn wl_distinguishes(g1: &Graph, g2: &Graph, k_max: usize) -> Option<usize> {
    let l1 = labels_from_features(g1);
    let l2 = labels_from_features(g2);
    wl_distinguishes_labeled(g1, &l1, g2, &l2, k_max)
}

pub fn wl_distinguishes_labeled(
    g1: &Graph,
    labels1: &[InitLabel],
    g2: &Graph,
    labels2: &[InitLabel],
    k_max: usize,
) -> Option<usize> {
    let (c1, c2) = wl_refine_pair(g1, labels1, g2, labels2, k_max);
    let last = c1.iterations.len().max(c2.iterations.len()) - 1;
    for k in 0..=last.min(k_max) {
        if c1.histogram(k) != c2.histogram(k) {
            return Some(k);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::permute_graph;

    fn uniform(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(n, edges, vec![vec![1.0]; n], None).unwrap()
    }

    fn cycle(n: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    }

    #[test]
    fn vertex_transitive_graph_keeps_one_color() {
        let g = uniform(3, &cycle(3));
        let coloring = wl_refine(&g, &labels_from_features(&g), 5);
        for it in &coloring.iterations {
            assert_eq!(distinct(it), 1);
        }
        assert!(coloring.stabilized);
    }

    #[test]
    fn path_splits_by_degree_at_iteration_one() {
        let g = uniform(3, &[(0, 1), (1, 2)]);
        let coloring = wl_refine(&g, &labels_from_features(&g), 5);
        assert_eq!(distinct(&coloring.iterations[0]), 1);
        assert_eq!(distinct(&coloring.iterations[1]), 2);
        assert_eq!(coloring.iterations[1][0], coloring.iterations[1][2]);
        assert_ne!(coloring.iterations[1][0], coloring.iterations[1][1]);
    }

    #[test]
    fn triangle_vs_path_distinguished_at_one() {
        let k3 = uniform(3, &cycle(3));
        let p3 = uniform(3, &[(0, 1), (1, 2)]);
        assert_eq!(wl_distinguishes(&k3, &p3, 5), Some(1));
        assert_eq!(wl_distinguishes(&k3, &p3, 0), None);
    }

    #[test]
    fn isomorphic_graphs_are_never_distinguished() {
        let mut rng = crate::Rng::seed_from(9);
        for _ in 0..100 {
            let n = 2 + rng.below(7);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.uniform() < 0.4 {
                        edges.push((u, v));
                    }
                }
            }
            let g = uniform(n, &edges);
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let h = permute_graph(&g, &perm).unwrap();
            assert_eq!(wl_distinguishes(&g, &h, 10), None);
        }
    }

    #[test]
    fn six_cycle_vs_two_triangles_is_indistinguishable() {
        // the classic 1-WL blind spot: both are 2-regular on 6 nodes
        let c6 = uniform(6, &cycle(6));
        let two_k3 = uniform(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert_eq!(wl_distinguishes(&c6, &two_k3, 10), None);
    }

    #[test]
    fn initial_labels_distinguish_at_zero() {
        let g1 = Graph::new(2, &[(0, 1)], vec![vec![1.0], vec![1.0]], None).unwrap();
        let g2 = Graph::new(2, &[(0, 1)], vec![vec![1.0], vec![2.0]], None).unwrap();
        assert_eq!(wl_distinguishes(&g1, &g2, 3), Some(0));
    }

    #[test]
    fn refinement_is_monotone_and_stabilizes_within_n() {
        let mut rng = crate::Rng::seed_from(23);
        for _ in 0..60 {
            let n = 1 + rng.below(8);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.uniform() < 0.35 {
                        edges.push((u, v));
                    }
                }
            }
            let g = uniform(n, &edges);
            let coloring = wl_refine(&g, &labels_from_features(&g), n);
            assert!(coloring.stabilized, "n={n} must stabilize within n steps");
            for w in coloring.iterations.windows(2) {
                assert!(distinct(&w[1]) >= distinct(&w[0]));
                // refinement: equal new colors imply equal old colors
                for a in 0..n {
                    for b in 0..n {
                        if w[1][a] == w[1][b] {
                            assert_eq!(w[0][a], w[0][b]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shared_table_makes_colors_comparable() {
        let mut table = ColorTable::new();
        let g = uniform(4, &cycle(4));
        let h = uniform(4, &cycle(4));
        let a = wl_refine_with(&mut table, &g, &labels_from_features(&g), 3);
        let b = wl_refine_with(&mut table, &h, &labels_from_features(&h), 3);
        assert_eq!(a.final_colors(), b.final_colors());
    }
}
