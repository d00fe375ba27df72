//! Builders for example spaces: symplectic mapping tori, moment-map level
//! sets, the `ℂⁿ × S¹` torus scenarios and a few fixtures, plus a registry
//! keyed by name.

mod examples;
mod level_set;
mod mapping_torus;
mod registry;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{ChartedManifold, FormPair};
use crate::groupoid::{FoliationSpec, HolonomyProbe, SubmersionGroupoid};
use crate::hamiltonian::{SliceParam, TorusActionSpec};

pub use examples::{
    cn_example, complex_factor_omega, kernel_defect_fixture, r3_standard, r4_precosymplectic,
    rotate_pair, sphere_mapping_torus, sphere_pole_chart, Pole, COMPLEX_DISK_RADIUS,
};
pub use level_set::{level_set_structure, Parametrization};
pub use mapping_torus::{mapping_torus, MappingTorusSpec, SYMPLECTOMORPHISM_TOL};
pub use registry::{build_scenario, registry, RegistryEntry};

/// One example space end to end: chart, forms and the optional data the
/// checks consume.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub manifold: ChartedManifold,
    pub forms: FormPair,
    pub action: Option<TorusActionSpec>,
    pub foliation: Option<FoliationSpec>,
    /// Alternative foliation kept for comparison runs.
    pub foliation_variant: Option<FoliationSpec>,
    pub holonomy: Option<HolonomyProbe>,
    pub arrows: Option<SubmersionGroupoid>,
    pub slice: Option<SliceParam>,
    /// Default clip box for moment bodies, one `[lo, hi]` per moment coordinate.
    pub clip_box: Option<Vec<[f64; 2]>>,
    /// Construction residuals (seam consistency, symplectomorphism defect, ...).
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .field("action", &self.action)
            .field("foliation", &self.foliation)
            .field("holonomy", &self.holonomy)
            .field("arrows", &self.arrows)
            .field("diagnostics", &self.diagnostics)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    pub fn new(name: &str, manifold: ChartedManifold, forms: FormPair) -> Self {
        Self {
            name: name.into(),
            manifold,
            forms,
            action: None,
            foliation: None,
            foliation_variant: None,
            holonomy: None,
            arrows: None,
            slice: None,
            clip_box: None,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_action(mut self, action: TorusActionSpec) -> Self {
        self.action = Some(action);
        self
    }

    pub fn with_foliation(mut self, foliation: FoliationSpec) -> Self {
        self.foliation = Some(foliation);
        self
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn action(&self) -> Result<&TorusActionSpec> {
        self.action.as_ref().ok_or(Error::NoAction)
    }

    /// Swaps in the alternative foliation; the report records the label used.
    pub fn use_foliation_variant(&mut self) -> bool {
        match self.foliation_variant.take() {
            Some(v) => {
                self.foliation_variant = self.foliation.replace(v);
                true
            }
            None => false,
        }
    }

    /// Checks that every attached callable works in the chart's dimension,
    /// evaluating each at one grid point.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let grid = self.manifold.grid();
        let x = grid
            .points()
            .first()
            .map(|p| p.coords.clone())
            .ok_or_else(|| Error::InvalidArgument(format!("{}: empty grid", self.name)))?;
        let mismatch = |what: &str, got: usize| {
            Err(Error::ShapeMismatch(format!(
                "{}: {what} has dimension {got}, chart has {dim}",
                self.name
            )))
        };
        let om = self.forms.omega(&x);
        if om.nrows() != dim || om.ncols() != dim {
            return mismatch("omega", om.nrows());
        }
        if self.forms.eta(&x).len() != dim {
            return mismatch("eta", self.forms.eta(&x).len());
        }
        if let Some(a) = &self.action {
            let fields = a.fields_at(&x);
            if fields.nrows() != dim {
                return mismatch("a fundamental field", fields.nrows());
            }
            let theta = vec![0.0; a.torus_rank()];
            if a.act(&theta, &x).len() != dim {
                return mismatch("the action", a.act(&theta, &x).len());
            }
            if let Ok(mu) = a.moment(&x) {
                if mu.len() != a.moment_dim() {
                    return Err(Error::ShapeMismatch(format!(
                        "{}: moment map has {} components, basis has {}",
                        self.name,
                        mu.len(),
                        a.moment_dim()
                    )));
                }
            }
        }
        for fol in self.foliation.iter().chain(&self.foliation_variant) {
            if let Some(v) = fol.vectors_at(&x).iter().find(|v| v.len() != dim) {
                return mismatch("a spanning field", v.len());
            }
        }
        if let Some(slice) = &self.slice {
            let u = slice.chart.grid().points()[0].coords.clone();
            let y = (slice.map)(&u);
            if y.len() != dim {
                return mismatch("the slice", y.len());
            }
        }
        if let Some(g) = &self.arrows {
            let p = g.arrows.grid().points()[0].coords.clone();
            for y in [(g.source)(&p), (g.target)(&p)] {
                if y.len() != dim {
                    return mismatch("source/target", y.len());
                }
            }
        }
        Ok(())
    }
}
