//! Numerical construction and verification toolkit for precosymplectic
//! manifolds, Hamiltonian torus actions, moment bodies and foliation groupoids
//! carrying 0-shifted cosymplectic structures.
//!
//! Every geometric object lives on a single chart ([`geometry::ChartedManifold`])
//! and is sampled on that chart's grid; all checks are finite-difference and
//! SVD based with explicit tolerances.

// `!(r <= tol)` is deliberate: a NaN residual must fail. Index loops mirror the component formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constructions;
pub mod error;
pub mod geometry;
pub mod groupoid;
pub mod hamiltonian;
pub mod numeric;
pub mod tensor_point;

pub use error::{Error, FormKind, Result};
pub use geometry::{ChartedManifold, FormPair, StructureClassification, Verdict};
pub use tensor_point::{PointTensor, SubspaceBasis, SubspaceRelation};
