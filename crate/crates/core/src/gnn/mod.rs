//! Graph neural networks built around injective neighborhood aggregation.
//!
//! Five variants share one layer pipeline: a per-node transform, a sum over
//! neighbor outputs, and a combine MLP. The transform is either the identity
//! (GIN and first-layer-identity variants), a fixed sum-of-powers map whose
//! aggregate equals [`crate::codec::encode_multiset`] of the neighborhood, or
//! a learned MLP. Forward and backward run batched over stacked node rows;
//! gradients are exact, including through train-mode batch normalization.

mod backward;
mod forward;
mod params;

pub use backward::Gradients;
pub use forward::{BatchOut, Mode, Tape};
pub use params::{
    load_checkpoint, save_checkpoint, BatchNorm, CombineKind, Layer, Linear, Mlp, Model,
    ModelConfig, Transform, Variant, BN_EPS, BN_MOMENTUM,
};

use nalgebra::DMatrix;

use crate::codec::{encode_multiset, Premix};
use crate::error::Result;
use crate::multiset::Multiset;

/// Encodes a neighborhood multiset with the fixed sum-of-powers map. This is
/// the aggregation a [`Transform::Fixed`] layer computes for each node; the
/// standalone form exists for inspecting aggregated neighborhoods directly.
pub fn aggregate_fixed(
    neighbors: &Multiset,
    m_n: usize,
    normalize: bool,
    premix: Option<&Premix>,
) -> Result<Vec<f64>> {
    encode_multiset(neighbors, m_n, normalize, premix).map(|e| e.values().to_vec())
}

/// Two-layer MLP that computes the identity map exactly: the hidden layer
/// splits each coordinate into positive and negative parts, so
/// `relu(x) - relu(-x)` reassembles `x` bit for bit. No batch norm.
pub fn identity_mlp(dim: usize) -> Mlp {
    let w1 = DMatrix::from_fn(dim, 2 * dim, |i, j| {
        if j == i {
            1.0
        } else if j == i + dim {
            -1.0
        } else {
            0.0
        }
    });
    let w2 = DMatrix::from_fn(2 * dim, dim, |i, j| {
        if i == j {
            1.0
        } else if i == j + dim {
            -1.0
        } else {
            0.0
        }
    });
    Mlp {
        lin1: Linear {
            w: w1,
            b: nalgebra::DVector::zeros(2 * dim),
        },
        bn: None,
        lin2: Linear {
            w: w2,
            b: nalgebra::DVector::zeros(dim),
        },
    }
}

/// Rewires a GIN model as the MLP-transform variant: each layer's transform
/// becomes an exact-identity MLP and the combine stays the epsilon-weighted
/// sum with the original weights. The two models produce identical outputs,
/// which demonstrates that the MLP-transform family contains GIN.
pub fn gin_as_expmlp(gin: &Model) -> Result<Model> {
    if gin.config.variant != Variant::GinFinal {
        return Err(crate::error::Error::Config(
            "gin_as_expmlp expects a gin-final model".into(),
        ));
    }
    let layers = gin
        .layers
        .iter()
        .map(|l| Layer {
            transform: Transform::Mlp(identity_mlp(l.in_dim)),
            combine_kind: l.combine_kind,
            mlp: l.mlp.clone(),
            in_dim: l.in_dim,
        })
        .collect();
    let mut config = gin.config.clone();
    config.variant = Variant::ExpMlp;
    Ok(Model {
        config,
        layers,
        readout: gin.readout.clone(),
    })
}
