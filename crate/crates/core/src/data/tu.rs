//! Reading and writing the TU graph-collection layout.
//!
//! A dataset directory `NAME/` holds `NAME_A.txt` (one `u, v` edge per line,
//! 1-based global node ids), `NAME_graph_indicator.txt` (graph id per node),
//! `NAME_graph_labels.txt` (one label per graph), and optionally
//! `NAME_node_labels.txt` and `NAME_node_attributes.txt`. Parsing keeps the
//! content verbatim (edges stay directed and undeduplicated) so that a
//! parse, serialize, parse cycle is the identity.

use std::path::Path;

use crate::error::{Error, Result};

/// One graph as read from disk: local 0-based edges in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGraph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_labels: Option<Vec<i64>>,
    pub node_attrs: Option<Vec<Vec<f64>>>,
}

/// A parsed dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTu {
    pub name: String,
    pub graphs: Vec<RawGraph>,
    pub graph_labels: Vec<i64>,
}

/// Non-empty trimmed lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    let txt = std::fs::read_to_string(path)?;
    Ok(txt
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses a TU dataset directory; the directory name is the file prefix.
pub fn parse_tu(dir: &Path) -> Result<RawTu> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("dataset path {} has no name", dir.display())))?
        .to_string();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.display().to_string()));
    }
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator = read_lines(&indicator_path)?;
    let mut graph_of: Vec<usize> = Vec::with_capacity(indicator.len());
    let mut n_graphs = 0usize;
    for (ln, txt) in &indicator {
        let gid: usize = txt
            .parse()
            .map_err(|_| parse_err(&indicator_path, *ln, format!("bad graph id {txt:?}")))?;
        if gid == 0 {
            return Err(parse_err(&indicator_path, *ln, "graph ids are 1-based"));
        }
        graph_of.push(gid - 1);
        n_graphs = n_graphs.max(gid);
    }
    if n_graphs == 0 {
        return Err(parse_err(&indicator_path, 1, "no nodes listed"));
    }

    // Local index of each global node within its graph, in file order.
    let mut local_of: Vec<usize> = Vec::with_capacity(graph_of.len());
    let mut sizes = vec![0usize; n_graphs];
    for &g in &graph_of {
        local_of.push(sizes[g]);
        sizes[g] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(parse_err(
            &indicator_path,
            1,
            format!("graph {} has no nodes", empty + 1),
        ));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_graphs];
    let a_path = file("A");
    for (ln, txt) in read_lines(&a_path)? {
        let mut it = txt.split(',').map(str::trim);
        let (u, v) = match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => return Err(parse_err(&a_path, ln, format!("expected \"u, v\", got {txt:?}"))),
        };
        let parse_node = |s: &str| -> Result<usize> {
            let id: usize = s
                .parse()
                .map_err(|_| parse_err(&a_path, ln, format!("bad node id {s:?}")))?;
            if id == 0 || id > graph_of.len() {
                return Err(parse_err(
                    &a_path,
                    ln,
                    format!("node id {id} outside 1..={}", graph_of.len()),
                ));
            }
            Ok(id - 1)
        };
        let u = parse_node(u)?;
        let v = parse_node(v)?;
        if u == v {
            return Err(parse_err(&a_path, ln, format!("self loop at node {}", u + 1)));
        }
        if graph_of[u] != graph_of[v] {
            return Err(parse_err(
                &a_path,
                ln,
                format!("edge ({}, {}) crosses graphs", u + 1, v + 1),
            ));
        }
        edges[graph_of[u]].push((local_of[u], local_of[v]));
    }

    let labels_path = file("graph_labels");
    let label_lines = read_lines(&labels_path)?;
    if label_lines.len() != n_graphs {
        return Err(parse_err(
            &labels_path,
            label_lines.len().max(1),
            format!("expected {n_graphs} labels, got {}", label_lines.len()),
        ));
    }
    let mut graph_labels = Vec::with_capacity(n_graphs);
    for (ln, txt) in &label_lines {
        graph_labels.push(
            txt.parse::<i64>()
                .map_err(|_| parse_err(&labels_path, *ln, format!("bad label {txt:?}")))?,
        );
    }

    let node_labels_path = file("node_labels");
    let node_labels: Option<Vec<i64>> = if node_labels_path.exists() {
        let lines = read_lines(&node_labels_path)?;
        if lines.len() != graph_of.len() {
            return Err(parse_err(
                &node_labels_path,
                lines.len().max(1),
                format!("expected {} node labels, got {}", graph_of.len(), lines.len()),
            ));
        }
        let mut out = Vec::with_capacity(lines.len());
        for (ln, txt) in &lines {
            out.push(txt.parse::<i64>().map_err(|_| {
                parse_err(&node_labels_path, *ln, format!("bad node label {txt:?}"))
            })?);
        }
        Some(out)
    } else {
        None
    };

    let attrs_path = file("node_attributes");
    let node_attrs: Option<Vec<Vec<f64>>> = if attrs_path.exists() {
        let lines = read_lines(&attrs_path)?;
        if lines.len() != graph_of.len() {
            return Err(parse_err(
                &attrs_path,
                lines.len().max(1),
                format!("expected {} attribute rows, got {}", graph_of.len(), lines.len()),
            ));
        }
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
        let mut width = None;
        for (ln, txt) in &lines {
            let row: Vec<f64> = txt
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(&attrs_path, *ln, format!("bad attribute {s:?}")))
                })
                .collect::<Result<_>>()?;
            if !row.iter().all(|v| v.is_finite()) {
                return Err(parse_err(&attrs_path, *ln, "non-finite attribute"));
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(parse_err(
                        &attrs_path,
                        *ln,
                        format!("attribute width {} differs from {w}", row.len()),
                    ))
                }
                _ => {}
            }
            out.push(row);
        }
        Some(out)
    } else {
        None
    };

    let mut graphs = Vec::with_capacity(n_graphs);
    let mut per_graph_labels: Vec<Vec<i64>> = vec![Vec::new(); n_graphs];
    let mut per_graph_attrs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_graphs];
    for (global, &g) in graph_of.iter().enumerate() {
        if let Some(nl) = &node_labels {
            per_graph_labels[g].push(nl[global]);
        }
        if let Some(na) = &node_attrs {
            per_graph_attrs[g].push(na[global].clone());
        }
    }
    for g in 0..n_graphs {
        graphs.push(RawGraph {
            n_nodes: sizes[g],
            edges: std::mem::take(&mut edges[g]),
            node_labels: node_labels.is_some().then(|| std::mem::take(&mut per_graph_labels[g])),
            node_attrs: node_attrs.is_some().then(|| std::mem::take(&mut per_graph_attrs[g])),
        });
    }
    Ok(RawTu {
        name,
        graphs,
        graph_labels,
    })
}

/// Writes a dataset in the TU layout under `dir` (created if needed), using
/// `raw.name` as the file prefix. Nodes get contiguous global ids in graph
/// order; edges are written exactly as stored.
pub fn write_tu(raw: &RawTu, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = |suffix: &str| dir.join(format!("{}_{suffix}.txt", raw.name));

    let mut indicator = String::new();
    let mut a = String::new();
    let mut base = 0usize;
    for (gi, g) in raw.graphs.iter().enumerate() {
        for _ in 0..g.n_nodes {
            indicator.push_str(&format!("{}\n", gi + 1));
        }
        for &(u, v) in &g.edges {
            a.push_str(&format!("{}, {}\n", base + u + 1, base + v + 1));
        }
        base += g.n_nodes;
    }
    std::fs::write(file("graph_indicator"), indicator)?;
    std::fs::write(file("A"), a)?;

    let mut labels = String::new();
    for l in &raw.graph_labels {
        labels.push_str(&format!("{l}\n"));
    }
    std::fs::write(file("graph_labels"), labels)?;

    if raw.graphs.iter().any(|g| g.node_labels.is_some()) {
        let mut txt = String::new();
        for g in &raw.graphs {
            let nl = g.node_labels.as_ref().ok_or_else(|| {
                Error::Config("node labels present on some graphs but not all".into())
            })?;
            for l in nl {
                txt.push_str(&format!("{l}\n"));
            }
        }
        std::fs::write(file("node_labels"), txt)?;
    }
    if raw.graphs.iter().any(|g| g.node_attrs.is_some()) {
        let mut txt = String::new();
        for g in &raw.graphs {
            let na = g.node_attrs.as_ref().ok_or_else(|| {
                Error::Config("node attributes present on some graphs but not all".into())
            })?;
            for row in na {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                txt.push_str(&cells.join(", "));
                txt.push('\n');
            }
        }
        std::fs::write(file("node_attributes"), txt)?;
    }
    Ok(())
}
