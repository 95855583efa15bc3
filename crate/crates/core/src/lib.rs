//! Statistical manifolds modelled on weighted Sobolev spaces, charted by
//! deformed logarithms, and the nonlinear filters built on them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod deformed;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod geometry;
pub mod grid;
pub mod manifold;
pub mod measure;
pub mod sobolev;
pub mod verify;

pub use deformed::{transition_tau, DeformedExp, Family};
pub use domain::Domain;
pub use error::{Error, Result};
pub use grid::{GridFunction, MultiIndex, TensorGrid};
pub use measure::{ReferenceMeasure, Variant};
pub use manifold::{normalize, ManifoldPoint, TangentRep};
pub use sobolev::{hk_inner, mixed_norm, MixedNormSpec, SpaceKind};
