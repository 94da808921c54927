//! Last passage percolation in hierarchical random environments.
//!
//! Weights are pure functions of `(seed, coordinates)`, so every solver,
//! construction and experiment is reproducible at any thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construct;
pub mod env;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod lpp;
mod par;
pub mod rng;
pub mod stats;

pub use construct::{MultiScaleParams, ParamOverride};
pub use env::{EnvironmentKind, EnvironmentSpec, PoissonLayers, WeightField};
pub use error::{Error, Result};
pub use lattice::{DenseField, LatticeWeights};
pub use lpp::{DirectedPath, PassageResult, ScaleKey};
pub use par::with_threads;
