//! Dataset loading, preprocessing, and generation.

mod synthetic;
mod tu;

pub use synthetic::{
    enumerate_connected_graphs, gen_cycle_vs_chord_raw, gen_synthetic, gen_two_community_raw,
    random_graph, wl_blind_pair, SyntheticTask,
};
pub use tu::{parse_tu, write_tu, RawGraph, RawTu};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How raw node information becomes feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FeatureKind {
    /// One-hot over the sorted alphabet of node labels.
    #[serde(rename = "one-hot")]
    OneHotLabel,
    /// Constant feature `[1.0]`; structure-only datasets.
    #[serde(rename = "all-ones")]
    AllOnes,
    /// Continuous attributes, with a one-hot label block appended when node
    /// labels exist.
    #[serde(rename = "continuous")]
    ContinuousPlusOneHot,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::OneHotLabel => "one-hot",
            FeatureKind::AllOnes => "all-ones",
            FeatureKind::ContinuousPlusOneHot => "continuous",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-hot" => Ok(FeatureKind::OneHotLabel),
            "all-ones" => Ok(FeatureKind::AllOnes),
            "continuous" => Ok(FeatureKind::ContinuousPlusOneHot),
            other => Err(Error::Config(format!(
                "unknown feature kind {other:?}; expected one-hot, all-ones, or continuous"
            ))),
        }
    }
}

/// A ready-to-train collection of labeled graphs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graphs: Vec<Graph>,
    pub n_classes: usize,
    pub feature_kind: FeatureKind,
    /// Largest node degree; the neighborhood capacity a fixed transform needs.
    pub m_n: usize,
    /// Largest node count of any graph.
    pub m_g: usize,
    pub source: String,
    /// Content hash of the raw graphs, labels, and attributes.
    pub checksum: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn feat_dim(&self) -> usize {
        self.graphs[0].feat_dim()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs
            .iter()
            .map(|g| g.label.expect("preprocess assigns every graph a label"))
            .collect()
    }
}

/// Hash over the structural content: node counts, edges as stored, node
/// labels, attribute bit patterns, and graph labels. The directory name does
/// not participate, so a renamed copy hashes identically.
pub fn content_checksum(raw: &RawTu) -> String {
    let mut hasher = Sha256::new();
    for g in &raw.graphs {
        hasher.update(b"G");
        hasher.update(g.n_nodes.to_le_bytes());
        for &(u, v) in &g.edges {
            hasher.update(b"E");
            hasher.update(u.to_le_bytes());
            hasher.update(v.to_le_bytes());
        }
        if let Some(nl) = &g.node_labels {
            for l in nl {
                hasher.update(b"L");
                hasher.update(l.to_le_bytes());
            }
        }
        if let Some(na) = &g.node_attrs {
            for row in na {
                hasher.update(b"A");
                for v in row {
                    hasher.update(v.to_bits().to_le_bytes());
                }
            }
        }
    }
    for l in &raw.graph_labels {
        hasher.update(b"Y");
        hasher.update(l.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds node features and contiguous class labels from raw content.
pub fn preprocess(raw: &RawTu, kind: FeatureKind) -> Result<Dataset> {
    if raw.graphs.is_empty() {
        return Err(Error::Config(format!("dataset {} has no graphs", raw.name)));
    }

    let mut label_alphabet: Vec<i64> = raw
        .graphs
        .iter()
        .flat_map(|g| g.node_labels.iter().flatten().copied())
        .collect();
    label_alphabet.sort_unstable();
    label_alphabet.dedup();
    let label_pos =
        |l: i64| -> usize { label_alphabet.binary_search(&l).expect("label in alphabet") };

    let mut class_alphabet = raw.graph_labels.clone();
    class_alphabet.sort_unstable();
    class_alphabet.dedup();

    let mut graphs = Vec::with_capacity(raw.graphs.len());
    for (gi, g) in raw.graphs.iter().enumerate() {
        let features: Vec<Vec<f64>> = match kind {
            FeatureKind::AllOnes => vec![vec![1.0]; g.n_nodes],
            FeatureKind::OneHotLabel => {
                let nl = g.node_labels.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "one-hot features need node labels ({}_node_labels.txt is absent)",
                        raw.name
                    ))
                })?;
                nl.iter()
                    .map(|&l| {
                        let mut row = vec![0.0; label_alphabet.len()];
                        row[label_pos(l)] = 1.0;
                        row
                    })
                    .collect()
            }
            FeatureKind::ContinuousPlusOneHot => {
                let na = g.node_attrs.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "continuous features need node attributes \
                         ({}_node_attributes.txt is absent)",
                        raw.name
                    ))
                })?;
                let one_hot_dim = if g.node_labels.is_some() {
                    label_alphabet.len()
                } else {
                    0
                };
                na.iter()
                    .enumerate()
                    .map(|(v, row)| {
                        let mut out = Vec::with_capacity(row.len() + one_hot_dim);
                        out.extend_from_slice(row);
                        if let Some(nl) = &g.node_labels {
                            let mut hot = vec![0.0; label_alphabet.len()];
                            hot[label_pos(nl[v])] = 1.0;
                            out.extend_from_slice(&hot);
                        }
                        out
                    })
                    .collect()
            }
        };
        let class = class_alphabet
            .binary_search(&raw.graph_labels[gi])
            .expect("class in alphabet");
        graphs.push(Graph::new(g.n_nodes, &g.edges, features, Some(class))?);
    }

    let m_n = graphs.iter().map(Graph::max_degree).max().unwrap_or(0).max(1);
    let m_g = graphs.iter().map(Graph::n_nodes).max().unwrap_or(0);
    Ok(Dataset {
        graphs,
        n_classes: class_alphabet.len(),
        feature_kind: kind,
        m_n,
        m_g,
        source: raw.name.clone(),
        checksum: content_checksum(raw),
    })
}

/// Parses and preprocesses a TU dataset directory in one step.
pub fn load_tu(dir: &std::path::Path, kind: FeatureKind) -> Result<Dataset> {
    preprocess(&parse_tu(dir)?, kind)
}
