//! Parameter containers, initialization, flattening, and checkpoints.
//!
//! All trainable tensors live in plain structs so the optimizer can view the
//! whole model as one flat `Vec<f64>`. Flattening order is fixed: layers in
//! order, then the readout; within an MLP `w1, b1, (gamma, beta), w2, b2`;
//! matrices are traversed column-major. `collect_params`, `set_params`, and
//! gradient flattening all share this order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::codec::random_premix;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Epsilon inside the batch-norm denominator.
pub const BN_EPS: f64 = 1e-5;
/// Running-stat update: `running = BN_MOMENTUM * running + (1 - BN_MOMENTUM) * batch`.
pub const BN_MOMENTUM: f64 = 0.9;

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Sum-of-powers transform with fixed (non-learned) parameters.
    ExpFixed,
    /// Learned MLP transform.
    ExpMlp,
    /// ExpFixed with an identity transform in the first layer.
    ExpFiFixed,
    /// ExpMlp with an identity transform in the first layer.
    ExpFiMlp,
    /// Plain GIN: identity transform, epsilon-weighted sum combine.
    GinFinal,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::ExpFixed,
        Variant::ExpMlp,
        Variant::ExpFiFixed,
        Variant::ExpFiMlp,
        Variant::GinFinal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ExpFixed => "exp-fixed",
            Variant::ExpMlp => "exp-mlp",
            Variant::ExpFiFixed => "exp-fi-fixed",
            Variant::ExpFiMlp => "exp-fi-mlp",
            Variant::GinFinal => "gin-final",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!(
                    "unknown variant {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Dense layer computing `y = x * w + b` on row vectors; `w` is `in x out`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inp: usize, out: usize, rng: &mut Rng) -> Linear {
        let a = (6.0 / (inp + out) as f64).sqrt();
        Linear {
            w: DMatrix::from_fn(inp, out, |_, _| rng.uniform_in(-a, a)),
            b: DVector::zeros(out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// Batch normalization over feature columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
    pub running_mean: DVector<f64>,
    pub running_var: DVector<f64>,
}

impl BatchNorm {
    pub fn init(dim: usize) -> BatchNorm {
        BatchNorm {
            gamma: DVector::from_element(dim, 1.0),
            beta: DVector::zeros(dim),
            running_mean: DVector::zeros(dim),
            running_var: DVector::from_element(dim, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

/// Two-layer perceptron: `lin2(relu(bn(lin1(x))))` with optional batch norm
/// on the hidden activations. The output layer is linear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub lin1: Linear,
    pub bn: Option<BatchNorm>,
    pub lin2: Linear,
}

impl Mlp {
    pub fn init(inp: usize, hidden: usize, out: usize, batch_norm: bool, rng: &mut Rng) -> Mlp {
        Mlp {
            lin1: Linear::init(inp, hidden, rng),
            bn: batch_norm.then(|| BatchNorm::init(hidden)),
            lin2: Linear::init(hidden, out, rng),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.lin1.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.lin2.out_dim()
    }

    fn collect_into(&self, out: &mut Vec<f64>) {
        out.extend(self.lin1.w.iter());
        out.extend(self.lin1.b.iter());
        if let Some(bn) = &self.bn {
            out.extend(bn.gamma.iter());
            out.extend(bn.beta.iter());
        }
        out.extend(self.lin2.w.iter());
        out.extend(self.lin2.b.iter());
    }

    fn set_from(&mut self, cur: &mut std::slice::Iter<'_, f64>) {
        for x in self.lin1.w.iter_mut() {
            *x = *cur.next().expect("length checked");
        }
        for x in self.lin1.b.iter_mut() {
            *x = *cur.next().expect("length checked");
        }
        if let Some(bn) = &mut self.bn {
            for x in bn.gamma.iter_mut() {
                *x = *cur.next().expect("length checked");
            }
            for x in bn.beta.iter_mut() {
                *x = *cur.next().expect("length checked");
            }
        }
        for x in self.lin2.w.iter_mut() {
            *x = *cur.next().expect("length checked");
        }
        for x in self.lin2.b.iter_mut() {
            *x = *cur.next().expect("length checked");
        }
    }

    pub fn param_count(&self) -> usize {
        let bn = self.bn.as_ref().map_or(0, |b| 2 * b.dim());
        self.lin1.w.len() + self.lin1.b.len() + bn + self.lin2.w.len() + self.lin2.b.len()
    }
}

/// Per-element transform applied before neighborhood aggregation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Transform {
    /// Pass features through unchanged.
    Identity,
    /// Fixed sum-of-powers feature map; no trainable parameters.
    Fixed {
        m_n: usize,
        normalize: bool,
        premix: Option<DMatrix<f64>>,
    },
    /// Learned per-element MLP.
    Mlp(Mlp),
}

impl Transform {
    pub fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Transform::Identity => in_dim,
            Transform::Fixed { m_n, .. } => in_dim * m_n + 1,
            Transform::Mlp(m) => m.out_dim(),
        }
    }
}

/// How a node's own embedding meets its aggregated neighborhood.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum CombineKind {
    /// `[own | aggregate]` fed to the combine MLP.
    Concat,
    /// `(1 + eps) * own + aggregate`; requires matching dimensions.
    EpsSum { eps: f64 },
}

/// One message-passing layer: transform, sum over neighbors, combine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub transform: Transform,
    pub combine_kind: CombineKind,
    pub mlp: Mlp,
    pub in_dim: usize,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }
}

/// Everything needed to build a model deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub n_layers: usize,
    pub hidden: usize,
    pub in_dim: usize,
    pub n_classes: usize,
    /// Neighborhood capacity of the fixed transform (max degree it can encode).
    pub m_n: usize,
    pub normalize: bool,
    pub batch_norm: bool,
    pub gin_epsilon: f64,
    /// Seed for per-layer orthogonal premix matrices; `None` disables premixing.
    pub premix_seed: Option<u64>,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(variant: Variant, in_dim: usize, n_classes: usize, m_n: usize) -> ModelConfig {
        ModelConfig {
            variant,
            n_layers: 5,
            hidden: 32,
            in_dim,
            n_classes,
            m_n,
            normalize: true,
            batch_norm: true,
            gin_epsilon: 0.0,
            premix_seed: None,
            seed: 0,
        }
    }
}

/// A stack of message-passing layers plus a sum readout and classifier MLP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub layers: Vec<Layer>,
    pub readout: Mlp,
}

impl Model {
    /// Builds a model with seeded Glorot-uniform weights. The draw order is
    /// fixed (per layer: transform MLP if any, then combine MLP; finally the
    /// readout), so equal configs give bit-identical models.
    pub fn init(config: &ModelConfig) -> Result<Model> {
        if config.n_layers == 0 {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        if config.n_classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        if config.in_dim == 0 {
            return Err(Error::Config("input feature dimension must be positive".into()));
        }
        let mut rng = Rng::seed_from(config.seed);
        let mut layers = Vec::with_capacity(config.n_layers);
        for k in 0..config.n_layers {
            let in_dim = if k == 0 { config.in_dim } else { config.hidden };
            let identity_first = matches!(
                config.variant,
                Variant::ExpFiFixed | Variant::ExpFiMlp
            ) && k == 0;
            let transform = if identity_first || config.variant == Variant::GinFinal {
                Transform::Identity
            } else {
                match config.variant {
                    Variant::ExpFixed | Variant::ExpFiFixed => Transform::Fixed {
                        m_n: config.m_n,
                        normalize: config.normalize,
                        premix: config.premix_seed.map(|s| {
                            let mut prng = Rng::seed_from(s).child(k as u64);
                            random_premix(in_dim, &mut prng).matrix().clone()
                        }),
                    },
                    Variant::ExpMlp | Variant::ExpFiMlp => Transform::Mlp(Mlp::init(
                        in_dim,
                        config.hidden,
                        config.hidden,
                        config.batch_norm,
                        &mut rng,
                    )),
                    Variant::GinFinal => unreachable!(),
                }
            };
            let combine_kind = if config.variant == Variant::GinFinal {
                CombineKind::EpsSum {
                    eps: config.gin_epsilon,
                }
            } else {
                CombineKind::Concat
            };
            let t_out = transform.out_dim(in_dim);
            let mlp_in = match combine_kind {
                CombineKind::Concat => in_dim + t_out,
                CombineKind::EpsSum { .. } => {
                    debug_assert_eq!(t_out, in_dim);
                    in_dim
                }
            };
            layers.push(Layer {
                transform,
                combine_kind,
                mlp: Mlp::init(mlp_in, config.hidden, config.hidden, config.batch_norm, &mut rng),
                in_dim,
            });
        }
        let readout = Mlp::init(
            config.hidden,
            config.hidden,
            config.n_classes,
            config.batch_norm,
            &mut rng,
        );
        Ok(Model {
            config: config.clone(),
            layers,
            readout,
        })
    }

    /// Flattens every trainable parameter into one vector.
    pub fn collect_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            if let Transform::Mlp(m) = &layer.transform {
                m.collect_into(&mut out);
            }
            layer.mlp.collect_into(&mut out);
        }
        self.readout.collect_into(&mut out);
        out
    }

    /// Writes a flat parameter vector back into the model.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let want = self.param_count();
        if params.len() != want {
            return Err(Error::ShapeMismatch {
                context: "set_params",
                expected: want,
                got: params.len(),
            });
        }
        let mut cur = params.iter();
        for layer in &mut self.layers {
            if let Transform::Mlp(m) = &mut layer.transform {
                m.set_from(&mut cur);
            }
            layer.mlp.set_from(&mut cur);
        }
        self.readout.set_from(&mut cur);
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let mut n = self.readout.param_count();
        for layer in &self.layers {
            if let Transform::Mlp(m) = &layer.transform {
                n += m.param_count();
            }
            n += layer.mlp.param_count();
        }
        n
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }
}

/// Gradient mirror of an [`Mlp`].
#[derive(Debug, Clone)]
pub(crate) struct MlpGrad {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub gamma: Option<DVector<f64>>,
    pub beta: Option<DVector<f64>>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl MlpGrad {
    pub fn zeros_like(m: &Mlp) -> MlpGrad {
        MlpGrad {
            w1: DMatrix::zeros(m.lin1.w.nrows(), m.lin1.w.ncols()),
            b1: DVector::zeros(m.lin1.b.len()),
            gamma: m.bn.as_ref().map(|b| DVector::zeros(b.dim())),
            beta: m.bn.as_ref().map(|b| DVector::zeros(b.dim())),
            w2: DMatrix::zeros(m.lin2.w.nrows(), m.lin2.w.ncols()),
            b2: DVector::zeros(m.lin2.b.len()),
        }
    }

    fn collect_into(&self, out: &mut Vec<f64>) {
        out.extend(self.w1.iter());
        out.extend(self.b1.iter());
        if let Some(g) = &self.gamma {
            out.extend(g.iter());
        }
        if let Some(b) = &self.beta {
            out.extend(b.iter());
        }
        out.extend(self.w2.iter());
        out.extend(self.b2.iter());
    }
}

/// Gradients for the whole model, flattened in `collect_params` order.
#[derive(Debug, Clone)]
pub(crate) struct ModelGrad {
    pub transforms: Vec<Option<MlpGrad>>,
    pub combines: Vec<MlpGrad>,
    pub readout: MlpGrad,
}

impl ModelGrad {
    pub fn zeros_like(model: &Model) -> ModelGrad {
        ModelGrad {
            transforms: model
                .layers
                .iter()
                .map(|l| match &l.transform {
                    Transform::Mlp(m) => Some(MlpGrad::zeros_like(m)),
                    _ => None,
                })
                .collect(),
            combines: model
                .layers
                .iter()
                .map(|l| MlpGrad::zeros_like(&l.mlp))
                .collect(),
            readout: MlpGrad::zeros_like(&model.readout),
        }
    }

    pub fn flatten(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for (t, c) in self.transforms.iter().zip(&self.combines) {
            if let Some(t) = t {
                t.collect_into(&mut out);
            }
            c.collect_into(&mut out);
        }
        self.readout.collect_into(&mut out);
        out
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    model: Model,
}

const CHECKPOINT_VERSION: u32 = 1;

/// Serializes a model to versioned JSON.
pub fn save_checkpoint(model: &Model, path: &std::path::Path) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        model: model.clone(),
    };
    let txt = serde_json::to_string(&file)?;
    std::fs::write(path, txt)?;
    Ok(())
}

/// Loads a model saved by [`save_checkpoint`], rejecting unknown versions.
pub fn load_checkpoint(path: &std::path::Path) -> Result<Model> {
    if !path.exists() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    let txt = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&txt)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "checkpoint version {} not supported (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    Ok(file.model)
}
