//! Infinitesimal foliation-groupoid data and the checks for 0-shifted
//! cosymplectic structures: quasi-isomorphism, basic forms, orbit invariance,
//! the arrow-space kernel identity and leaf holonomy of mapping tori.

mod arrows;
mod checks;
mod holonomy;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::geometry::{ChartedManifold, FormPair};
use crate::numeric::{PointMap, VectorField};

pub use arrows::{arrow_space_check, ArrowReport};
pub use checks::{
    basic_form_check, orbit_invariance_check, quasi_iso_check, BasicFormReport, OrbitReport,
    QuasiIsoReport, FLOW_STEP, MAX_SEGMENT_TIME,
};
pub use holonomy::{
    mapping_torus_holonomy, HolonomyDescriptor, HolonomyResult, DEFAULT_HOLONOMY_TOL, DEFAULT_N_MAX,
};

/// Exact flow `(field index, time, point) ↦ point` along one spanning field.
pub type LeafFlow = Arc<dyn Fn(usize, f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// The image of an injective anchor: a regular foliation given by spanning fields.
#[derive(Clone)]
pub struct FoliationSpec {
    pub label: String,
    spanning_fields: Vec<VectorField>,
    leaf_flow: Option<LeafFlow>,
}

impl fmt::Debug for FoliationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FoliationSpec")
            .field("label", &self.label)
            .field("rank", &self.rank())
            .field("exact_flow", &self.leaf_flow.is_some())
            .finish()
    }
}

impl FoliationSpec {
    pub fn new(label: &str, spanning_fields: Vec<VectorField>) -> Self {
        Self {
            label: label.into(),
            spanning_fields,
            leaf_flow: None,
        }
    }

    /// The zero foliation (points as leaves).
    pub fn zero(label: &str) -> Self {
        Self::new(label, Vec::new())
    }

    /// Foliation spanned by coordinate directions, with the exact translation flow.
    pub fn coordinate(label: &str, dim: usize, axes: &[usize]) -> Self {
        let fields = axes
            .iter()
            .map(|&a| {
                let f: VectorField = Arc::new(move |_x: &[f64]| {
                    DVector::from_fn(dim, |i, _| if i == a { 1.0 } else { 0.0 })
                });
                f
            })
            .collect();
        let axes = axes.to_vec();
        let flow: LeafFlow = Arc::new(move |i, t, x| {
            let mut y = x.to_vec();
            y[axes[i]] += t;
            y
        });
        Self::new(label, fields).with_leaf_flow(flow)
    }

    pub fn with_leaf_flow(mut self, flow: LeafFlow) -> Self {
        self.leaf_flow = Some(flow);
        self
    }

    /// Appends a spanning field; any exact flow is dropped since it no longer covers every field.
    pub fn with_field(mut self, field: VectorField) -> Self {
        self.spanning_fields.push(field);
        self.leaf_flow = None;
        self
    }

    pub fn rank(&self) -> usize {
        self.spanning_fields.len()
    }

    pub fn spanning_fields(&self) -> &[VectorField] {
        &self.spanning_fields
    }

    pub fn leaf_flow(&self) -> Option<&LeafFlow> {
        self.leaf_flow.as_ref()
    }

    pub fn vectors_at(&self, x: &[f64]) -> Vec<DVector<f64>> {
        self.spanning_fields.iter().map(|f| f(x)).collect()
    }
}

/// Return map of a closed leaf on a transversal through the origin.
#[derive(Clone)]
pub struct HolonomyProbe {
    pub label: String,
    pub return_map: PointMap,
    pub test_point: Vec<f64>,
}

impl fmt::Debug for HolonomyProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolonomyProbe")
            .field("label", &self.label)
            .field("test_point", &self.test_point)
            .finish_non_exhaustive()
    }
}

/// Arrow chart of a submersion groupoid `G ⇉ M` with coordinate source and target.
#[derive(Clone)]
pub struct SubmersionGroupoid {
    pub arrows: ChartedManifold,
    pub source: PointMap,
    pub target: PointMap,
    /// Forms on the arrows; `None` means `(s*ω, s*η)`.
    pub arrow_forms: Option<FormPair>,
}

impl fmt::Debug for SubmersionGroupoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubmersionGroupoid")
            .field("arrows", &self.arrows)
            .field("explicit_forms", &self.arrow_forms.is_some())
            .finish_non_exhaustive()
    }
}
