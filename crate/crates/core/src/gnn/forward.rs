//! Batched forward pass.
//!
//! A batch stacks all nodes of all graphs into one matrix (row per node) and
//! runs every layer as dense matrix work. Neighborhood sums accumulate rows
//! in lexicographic row order, so relabeling a graph's nodes changes nothing,
//! not even the floating-point rounding. Train mode records a tape for the
//! backward pass and returns batch-norm statistics to fold into the running
//! estimates; eval mode normalizes with the stored running statistics.

use nalgebra::{DMatrix, DVector};

use crate::codec::{mth_root, phi_into, phi_width};
use crate::error::{Error, Result};
use crate::graph::Graph;

use super::params::{
    BatchNorm, CombineKind, Mlp, Model, Transform, BN_EPS, BN_MOMENTUM,
};

/// Whether batch norm uses batch statistics (and a tape is recorded) or the
/// stored running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub(crate) struct BnTape {
    pub xhat: DMatrix<f64>,
    pub inv_std: DVector<f64>,
}

pub(crate) struct MlpTape {
    pub x: DMatrix<f64>,
    pub bn: Option<BnTape>,
    pub pre_relu: DMatrix<f64>,
    pub post_relu: DMatrix<f64>,
}

pub(crate) struct FixedTape {
    /// First premixed coordinate of each node, before normalization.
    pub first: Vec<f64>,
    /// Rows fed to the power map (premixed, normalized).
    pub phi_input: DMatrix<f64>,
}

pub(crate) struct LayerTape {
    pub fixed: Option<FixedTape>,
    pub t_mlp: Option<MlpTape>,
    pub mlp: MlpTape,
}

/// Everything the backward pass needs from one forward call.
pub struct Tape {
    pub(crate) adj: Vec<Vec<usize>>,
    pub(crate) graph_of: Vec<usize>,
    pub(crate) n_graphs: usize,
    pub(crate) layers: Vec<LayerTape>,
    pub(crate) readout: MlpTape,
}

/// Forward results for a batch of graphs.
pub struct BatchOut {
    /// One row of class scores per graph.
    pub logits: DMatrix<f64>,
    /// One row per graph: the summed node embeddings before the classifier.
    pub embeddings: DMatrix<f64>,
    /// Present when the forward ran in train mode.
    pub tape: Option<Tape>,
}

pub(crate) struct BnUpdate {
    mean: DVector<f64>,
    var: DVector<f64>,
}

/// Compares two rows entry by entry.
pub(crate) fn row_lex(m: &DMatrix<f64>, a: usize, b: usize) -> std::cmp::Ordering {
    for j in 0..m.ncols() {
        let ord = m[(a, j)].total_cmp(&m[(b, j)]);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

fn add_bias(z: &mut DMatrix<f64>, b: &DVector<f64>) {
    for j in 0..z.ncols() {
        let mut col = z.column_mut(j);
        col.add_scalar_mut(b[j]);
    }
}

fn bn_forward(
    bn: &BatchNorm,
    x: &DMatrix<f64>,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> (DMatrix<f64>, Option<BnTape>) {
    let (n, c) = x.shape();
    match mode {
        Mode::Train => {
            let nf = n as f64;
            let mut mean = DVector::zeros(c);
            let mut var = DVector::zeros(c);
            for j in 0..c {
                let col = x.column(j);
                let m = col.sum() / nf;
                mean[j] = m;
                var[j] = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
            }
            let inv_std = var.map(|v| 1.0 / (v + BN_EPS).sqrt());
            let mut xhat = x.clone();
            for j in 0..c {
                let mut col = xhat.column_mut(j);
                col.add_scalar_mut(-mean[j]);
                col *= inv_std[j];
            }
            let mut y = xhat.clone();
            for j in 0..c {
                let mut col = y.column_mut(j);
                col *= bn.gamma[j];
                col.add_scalar_mut(bn.beta[j]);
            }
            updates.push(BnUpdate { mean, var });
            (y, Some(BnTape { xhat, inv_std }))
        }
        Mode::Eval => {
            let mut y = x.clone();
            for j in 0..c {
                let scale = bn.gamma[j] / (bn.running_var[j] + BN_EPS).sqrt();
                let shift = bn.beta[j] - bn.running_mean[j] * scale;
                let mut col = y.column_mut(j);
                col *= scale;
                col.add_scalar_mut(shift);
            }
            (y, None)
        }
    }
}

/// Runs `lin2(relu(bn(lin1(x))))`; the tape is recorded only in train mode.
pub(crate) fn mlp_forward(
    mlp: &Mlp,
    x: DMatrix<f64>,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> (DMatrix<f64>, Option<MlpTape>) {
    let mut z1 = &x * &mlp.lin1.w;
    add_bias(&mut z1, &mlp.lin1.b);
    let (pre_relu, bn_tape) = match &mlp.bn {
        Some(bn) => bn_forward(bn, &z1, mode, updates),
        None => (z1, None),
    };
    let post_relu = pre_relu.map(|v| v.max(0.0));
    let mut out = &post_relu * &mlp.lin2.w;
    add_bias(&mut out, &mlp.lin2.b);
    let tape = (mode == Mode::Train).then(|| MlpTape {
        x,
        bn: bn_tape,
        pre_relu,
        post_relu,
    });
    (out, tape)
}

pub(crate) fn fixed_forward(
    h: &DMatrix<f64>,
    m_n: usize,
    normalize: bool,
    premix: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, FixedTape)> {
    let (n, w) = h.shape();
    if let Some(p) = premix {
        if p.ncols() != w {
            return Err(Error::ShapeMismatch {
                context: "premix width",
                expected: w,
                got: p.ncols(),
            });
        }
    }
    let mut phi_input = match premix {
        Some(p) => h * p.transpose(),
        None => h.clone(),
    };
    let first: Vec<f64> = phi_input.column(0).iter().copied().collect();
    if normalize {
        for v in phi_input.column_mut(0).iter_mut() {
            *v = mth_root(*v, m_n);
        }
    }
    let width = phi_width(w, m_n);
    let mut t = DMatrix::zeros(n, width);
    let mut row = vec![0.0; w];
    let mut out = vec![0.0; width];
    for v in 0..n {
        for j in 0..w {
            row[j] = phi_input[(v, j)];
        }
        phi_into(&row, m_n, &mut out);
        for (j, val) in out.iter().enumerate() {
            if !val.is_finite() {
                return Err(Error::NonFinite {
                    context: "fixed transform output",
                });
            }
            t[(v, j)] = *val;
        }
    }
    Ok((t, FixedTape { first, phi_input }))
}

/// Sums each node's neighbor rows of `t`, accumulating in lexicographic row
/// order so the result is independent of node numbering.
pub(crate) fn aggregate_rows(t: &DMatrix<f64>, adj: &[Vec<usize>]) -> DMatrix<f64> {
    let c = t.ncols();
    let mut out = DMatrix::zeros(adj.len(), c);
    let mut order: Vec<usize> = Vec::new();
    for (v, neigh) in adj.iter().enumerate() {
        order.clear();
        order.extend_from_slice(neigh);
        order.sort_by(|&a, &b| row_lex(t, a, b));
        for &u in &order {
            for j in 0..c {
                out[(v, j)] += t[(u, j)];
            }
        }
    }
    out
}

fn combine(
    kind: CombineKind,
    h: &DMatrix<f64>,
    agg: &DMatrix<f64>,
) -> DMatrix<f64> {
    match kind {
        CombineKind::Concat => {
            let (n, w) = h.shape();
            let wt = agg.ncols();
            let mut c = DMatrix::zeros(n, w + wt);
            c.columns_mut(0, w).copy_from(h);
            c.columns_mut(w, wt).copy_from(agg);
            c
        }
        CombineKind::EpsSum { eps } => h * (1.0 + eps) + agg,
    }
}

impl Model {
    /// Pure forward pass: never touches running batch-norm statistics. Train
    /// mode uses batch statistics and records a tape; eval mode uses running
    /// statistics.
    pub fn forward(&self, graphs: &[&Graph], mode: Mode) -> Result<BatchOut> {
        self.forward_inner(graphs, mode).map(|(out, _)| out)
    }

    /// Train-mode forward that also folds the batch statistics into the
    /// running estimates.
    pub fn forward_train(&mut self, graphs: &[&Graph]) -> Result<BatchOut> {
        let (out, updates) = self.forward_inner(graphs, Mode::Train)?;
        self.apply_bn_updates(updates);
        Ok(out)
    }

    /// Embedding and class scores for one graph in eval mode.
    pub fn eval_graph(&self, g: &Graph) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.forward(&[g], Mode::Eval)?;
        let emb = out.embeddings.row(0).iter().copied().collect();
        let logits = out.logits.row(0).iter().copied().collect();
        Ok((emb, logits))
    }

    fn uses_fixed_transform(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.transform, Transform::Fixed { .. }))
    }

    fn forward_inner(
        &self,
        graphs: &[&Graph],
        mode: Mode,
    ) -> Result<(BatchOut, Vec<BnUpdate>)> {
        if graphs.is_empty() {
            return Err(Error::Config("forward needs at least one graph".into()));
        }
        for g in graphs {
            if g.feat_dim() != self.config.in_dim {
                return Err(Error::ShapeMismatch {
                    context: "graph feature dimension",
                    expected: self.config.in_dim,
                    got: g.feat_dim(),
                });
            }
        }
        if self.uses_fixed_transform() {
            for g in graphs {
                let deg = g.max_degree();
                if deg > self.config.m_n {
                    return Err(Error::CapacityExceeded {
                        len: deg,
                        cap: self.config.m_n,
                    });
                }
            }
        }

        let n_total: usize = graphs.iter().map(|g| g.n_nodes()).sum();
        let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n_total);
        let mut graph_of: Vec<usize> = Vec::with_capacity(n_total);
        let mut h = DMatrix::zeros(n_total, self.config.in_dim);
        let mut base = 0usize;
        for (gi, g) in graphs.iter().enumerate() {
            for v in 0..g.n_nodes() {
                adj.push(g.neighbors(v).iter().map(|&u| u + base).collect());
                graph_of.push(gi);
                for (j, &val) in g.features(v).iter().enumerate() {
                    h[(base + v, j)] = val;
                }
            }
            base += g.n_nodes();
        }

        let want_tape = mode == Mode::Train;
        let mut updates = Vec::new();
        let mut layer_tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (t, fixed_tape, t_mlp_tape) = match &layer.transform {
                Transform::Identity => (h.clone(), None, None),
                Transform::Fixed {
                    m_n,
                    normalize,
                    premix,
                } => {
                    let (t, tape) = fixed_forward(&h, *m_n, *normalize, premix.as_ref())?;
                    (t, want_tape.then_some(tape), None)
                }
                Transform::Mlp(m) => {
                    let (t, tape) = mlp_forward(m, h.clone(), mode, &mut updates);
                    (t, None, tape)
                }
            };
            let agg = aggregate_rows(&t, &adj);
            let c = combine(layer.combine_kind, &h, &agg);
            let (out, mlp_tape) = mlp_forward(&layer.mlp, c, mode, &mut updates);
            if want_tape {
                layer_tapes.push(LayerTape {
                    fixed: fixed_tape,
                    t_mlp: t_mlp_tape,
                    mlp: mlp_tape.expect("train mode records tapes"),
                });
            }
            h = out;
        }

        let n_graphs = graphs.len();
        let hidden = h.ncols();
        let mut g_mat = DMatrix::zeros(n_graphs, hidden);
        let mut base = 0usize;
        for (gi, g) in graphs.iter().enumerate() {
            let mut order: Vec<usize> = (base..base + g.n_nodes()).collect();
            order.sort_by(|&a, &b| row_lex(&h, a, b));
            for &v in &order {
                for j in 0..hidden {
                    g_mat[(gi, j)] += h[(v, j)];
                }
            }
            base += g.n_nodes();
        }

        let (logits, readout_tape) =
            mlp_forward(&self.readout, g_mat.clone(), mode, &mut updates);
        let tape = want_tape.then(|| Tape {
            adj,
            graph_of,
            n_graphs,
            layers: layer_tapes,
            readout: readout_tape.expect("train mode records tapes"),
        });
        Ok((
            BatchOut {
                logits,
                embeddings: g_mat,
                tape,
            },
            updates,
        ))
    }

    fn apply_bn_updates(&mut self, updates: Vec<BnUpdate>) {
        let mut iter = updates.into_iter();
        let mut apply = |bn: &mut BatchNorm| {
            let up = iter
                .next()
                .expect("one update per batch-norm in traversal order");
            bn.running_mean = &bn.running_mean * BN_MOMENTUM + up.mean * (1.0 - BN_MOMENTUM);
            bn.running_var = &bn.running_var * BN_MOMENTUM + up.var * (1.0 - BN_MOMENTUM);
        };
        for layer in &mut self.layers {
            if let Transform::Mlp(m) = &mut layer.transform {
                if let Some(bn) = &mut m.bn {
                    apply(bn);
                }
            }
            if let Some(bn) = &mut layer.mlp.bn {
                apply(bn);
            }
        }
        if let Some(bn) = &mut self.readout.bn {
            apply(bn);
        }
        debug_assert!(iter.next().is_none(), "all updates consumed");
    }
}
