//! Plain-text graphs for `wl-compare`.
//!
//! Layout: the first significant line holds the node count n, the next n
//! lines hold one comma-separated feature vector per node (equal widths),
//! and every following line is an undirected edge `u,v` with 0-based
//! endpoints. Blank lines and lines starting with `#` are skipped.

use std::path::Path;

use setinject::error::{Error, Result};
use setinject::graph::Graph;

pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    let fname = path.display().to_string();
    let err = |line: usize, msg: String| Error::Parse {
        file: fname.clone(),
        line,
        msg,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, first) = lines
        .next()
        .ok_or_else(|| err(1, "empty graph file".into()))?;
    let n: usize = first
        .parse()
        .map_err(|e| err(ln, format!("bad node count {first:?}: {e}")))?;

    let mut features = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| err(0, format!("expected {n} feature lines")))?;
        let feats: Vec<f64> = row
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| err(ln, format!("bad feature {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        features.push(feats);
    }

    let mut edges = Vec::new();
    for (ln, row) in lines {
        let (u, v) = row
            .split_once(',')
            .ok_or_else(|| err(ln, format!("expected edge u,v, found {row:?}")))?;
        let parse = |t: &str| -> Result<usize> {
            let id: usize = t
                .trim()
                .parse()
                .map_err(|e| err(ln, format!("bad node id {t:?}: {e}")))?;
            if id >= n {
                return Err(err(ln, format!("node id {id} out of range for {n} nodes")));
            }
            Ok(id)
        };
        edges.push((parse(u)?, parse(v)?));
    }
    Graph::new(n, &edges, features, None)
}
