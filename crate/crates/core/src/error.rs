//! Shared error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("multiset holds {len} elements, capacity bound is {cap}")]
    CapacityExceeded { len: usize, cap: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("permutation is not a bijection on 0..{n}")]
    InvalidPermutation { n: usize },

    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },

    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    /// Vandermonde nodes too close to be treated as distinct.
    #[error("degenerate nodes: indices {i} and {j} differ by {gap:e}")]
    DegenerateNodes { i: usize, j: usize, gap: f64 },

    /// Overdetermined equations are not satisfied by the recovered solution.
    #[error("inconsistent system: residual {residual:e} exceeds tolerance {tol:e}")]
    InconsistentSystem { residual: f64, tol: f64 },

    /// The polynomial assembled from an encoding has complex roots, so the
    /// vector is not in the encoder's image.
    #[error("non-real roots: |imag| = {imag:e} exceeds tolerance {tol:e}")]
    NonRealRoots { imag: f64, tol: f64 },

    /// Eigenvalue iteration ran out of budget; without a cap, pathological
    /// companion matrices can cycle forever.
    #[error("eigenvalue iteration did not converge within {iters} QR steps")]
    NoConvergence { iters: usize },

    #[error("cardinality entry {value} is not an integer in 0..={max} within tolerance {tol:e}")]
    BadCardinality { value: f64, max: usize, tol: f64 },

    #[error("premix matrix is singular or ill-conditioned (cond ~ {cond:e})")]
    SingularPremix { cond: f64 },

    #[error("shape mismatch: {context} (expected {expected}, got {got})")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("class label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("missing required file: {0}")]
    MissingFile(String),

    #[error("parse error in {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
