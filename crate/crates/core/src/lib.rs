//! Injective multiset encodings and the GNN stack built on them.
//!
//! The library is organized around one numerical idea: a finite multiset of
//! real vectors can be mapped to a fixed-width vector by summing a monomial
//! transformation of each element, and that map is invertible as long as the
//! first coordinates of the elements stay distinct. [`codec`] implements the
//! encoder together with a constructive decoder (power sums, Newton
//! identities, polynomial roots, Vandermonde systems) that proves on every
//! call that the encoding really did pin down its input.
//!
//! On top of the codec sit:
//!
//! - [`wl`]: 1-dimensional Weisfeiler-Lehman color refinement, used as an
//!   independent oracle for how much structure a message-passing network can
//!   possibly see;
//! - [`gnn`]: forward and exact reverse-mode passes for the ExpGNN variants
//!   (fixed monomial aggregation, learnable-MLP aggregation, first-layer
//!   identity) and a GIN baseline that reads out the final layer only;
//! - [`train`]: cross-entropy loss, Adam, a stepped learning-rate schedule
//!   and a stratified 10-fold cross-validation harness;
//! - [`data`]: TU-format dataset parsing, feature preprocessing, and
//!   deterministic synthetic dataset generators.

pub mod codec;
pub mod data;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod multiset;
pub mod rng;
pub mod train;
pub mod wl;

pub use error::{Error, Result};
pub use graph::Graph;
pub use multiset::{FeatVec, Multiset};
pub use rng::Rng;
