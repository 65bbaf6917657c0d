//! Exact reverse-mode gradients for the batched forward pass.
//!
//! Mirrors `forward.rs` step by step in reverse. Aggregation transposes to a
//! scatter: the upstream gradient at node `v` flows to every neighbor that
//! contributed a row. Batch-norm backward differentiates through the batch
//! statistics, not just the affine part.

use nalgebra::{DMatrix, DVector};

use crate::codec::{normalize_deriv, phi_backward};
use crate::error::{Error, Result};

use super::forward::{BnTape, MlpTape, Tape};
use super::params::{BatchNorm, CombineKind, Mlp, MlpGrad, Model, ModelGrad, Transform};

fn bn_backward(
    bn: &BatchNorm,
    tape: &BnTape,
    dy: &DMatrix<f64>,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let (n, c) = dy.shape();
    let nf = n as f64;
    let mut dgamma = DVector::zeros(c);
    let mut dbeta = DVector::zeros(c);
    let mut dx = DMatrix::zeros(n, c);
    for j in 0..c {
        let mut s_dy = 0.0;
        let mut s_dyx = 0.0;
        for i in 0..n {
            s_dy += dy[(i, j)];
            s_dyx += dy[(i, j)] * tape.xhat[(i, j)];
        }
        dgamma[j] = s_dyx;
        dbeta[j] = s_dy;
        let g = bn.gamma[j];
        let s1 = g * s_dy;
        let s2 = g * s_dyx;
        let scale = tape.inv_std[j] / nf;
        for i in 0..n {
            let dxhat = g * dy[(i, j)];
            dx[(i, j)] = scale * (nf * dxhat - s1 - tape.xhat[(i, j)] * s2);
        }
    }
    (dx, dgamma, dbeta)
}

fn col_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

pub(crate) fn mlp_backward(
    mlp: &Mlp,
    tape: &MlpTape,
    dy: &DMatrix<f64>,
    grad: &mut MlpGrad,
) -> DMatrix<f64> {
    grad.w2 += tape.post_relu.transpose() * dy;
    grad.b2 += col_sums(dy);
    let dr = dy * mlp.lin2.w.transpose();
    let dpre = dr.zip_map(&tape.pre_relu, |d, p| if p > 0.0 { d } else { 0.0 });
    let dz1 = match (&mlp.bn, &tape.bn) {
        (Some(bn), Some(bn_tape)) => {
            let (dz1, dgamma, dbeta) = bn_backward(bn, bn_tape, &dpre);
            *grad.gamma.as_mut().expect("grad mirrors mlp") += dgamma;
            *grad.beta.as_mut().expect("grad mirrors mlp") += dbeta;
            dz1
        }
        (None, None) => dpre,
        _ => unreachable!("tape shape mirrors the mlp"),
    };
    grad.w1 += tape.x.transpose() * &dz1;
    grad.b1 += col_sums(&dz1);
    dz1 * mlp.lin1.w.transpose()
}

/// Loss gradients from one backward pass.
pub struct Gradients {
    /// Per-parameter gradient, flattened in [`Model::collect_params`] order.
    pub params: Vec<f64>,
    /// Gradient with respect to the stacked input features, one row per node.
    pub inputs: DMatrix<f64>,
}

impl Model {
    /// Gradient of a scalar loss with respect to every parameter and to the
    /// input features, given the loss gradient at the logits.
    pub fn backward(&self, tape: &Tape, dlogits: &DMatrix<f64>) -> Result<Gradients> {
        if dlogits.nrows() != tape.n_graphs || dlogits.ncols() != self.config.n_classes {
            return Err(Error::ShapeMismatch {
                context: "logit gradient shape",
                expected: tape.n_graphs * self.config.n_classes,
                got: dlogits.nrows() * dlogits.ncols(),
            });
        }
        let mut grads = ModelGrad::zeros_like(self);
        let dg = mlp_backward(&self.readout, &tape.readout, dlogits, &mut grads.readout);

        let n_total = tape.graph_of.len();
        let hidden = dg.ncols();
        let mut dh = DMatrix::zeros(n_total, hidden);
        for v in 0..n_total {
            let gi = tape.graph_of[v];
            for j in 0..hidden {
                dh[(v, j)] = dg[(gi, j)];
            }
        }

        for (k, layer) in self.layers.iter().enumerate().rev() {
            let ltape = &tape.layers[k];
            let dc = mlp_backward(&layer.mlp, &ltape.mlp, &dh, &mut grads.combines[k]);
            let w = layer.in_dim;
            let (dh_own, da) = match layer.combine_kind {
                CombineKind::Concat => {
                    let wt = dc.ncols() - w;
                    (
                        dc.columns(0, w).into_owned(),
                        dc.columns(w, wt).into_owned(),
                    )
                }
                CombineKind::EpsSum { eps } => (&dc * (1.0 + eps), dc.clone()),
            };

            let mut dt = DMatrix::zeros(n_total, da.ncols());
            for (v, neigh) in tape.adj.iter().enumerate() {
                for &u in neigh {
                    for j in 0..da.ncols() {
                        dt[(u, j)] += da[(v, j)];
                    }
                }
            }

            let dh_t = match &layer.transform {
                Transform::Identity => dt,
                Transform::Fixed {
                    m_n,
                    normalize,
                    premix,
                } => {
                    let fixed = ltape.fixed.as_ref().expect("tape mirrors the layer");
                    let mut dphi_in = DMatrix::zeros(n_total, w);
                    let mut row = vec![0.0; w];
                    let mut up = vec![0.0; dt.ncols()];
                    for v in 0..n_total {
                        for j in 0..w {
                            row[j] = fixed.phi_input[(v, j)];
                        }
                        for j in 0..dt.ncols() {
                            up[j] = dt[(v, j)];
                        }
                        let mut g = phi_backward(&row, *m_n, &up);
                        if *normalize {
                            g[0] *= normalize_deriv(fixed.first[v], *m_n);
                        }
                        for j in 0..w {
                            dphi_in[(v, j)] = g[j];
                        }
                    }
                    match premix {
                        Some(p) => dphi_in * p,
                        None => dphi_in,
                    }
                }
                Transform::Mlp(m) => mlp_backward(
                    m,
                    ltape.t_mlp.as_ref().expect("tape mirrors the layer"),
                    &dt,
                    grads.transforms[k].as_mut().expect("grad mirrors the layer"),
                ),
            };

            dh = dh_own + dh_t;
        }

        Ok(Gradients {
            params: grads.flatten(self.param_count()),
            inputs: dh,
        })
    }
}
