use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::constructions::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{
    classify_structure, verify_closed, ChartedManifold, StructureClassification,
};
use crate::numeric::{self, PointMap, JACOBIAN_STEP};
use crate::tensor_point::{numerical_rank, DEFAULT_TOL_RANK};

const LEVEL_TOL: f64 = 1e-8;

/// A cross-section of the torus orbits inside `μ⁻¹(0)`.
#[derive(Clone)]
pub struct SliceParam {
    pub chart: ChartedManifold,
    pub map: PointMap,
}

impl fmt::Debug for SliceParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SliceParam")
            .field("chart", &self.chart)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    #[serde(skip)]
    pub scenario: Scenario,
    pub classification: StructureClassification,
    /// `max ‖μ(slice(u))‖`.
    pub level_residual: f64,
    /// `max |dη_red|` by central differences.
    pub eta_closed_residual: f64,
    /// `min ‖η_red‖` over the slice grid.
    pub eta_min_norm: f64,
}

/// Pulls `(ω, η)` back to a slice of `μ⁻¹(0)` and classifies the result.
pub fn reduce_at_zero(
    s: &Scenario,
    slice: &SliceParam,
    tol_rank: f64,
    tol_closed: f64,
) -> Result<Reduction> {
    let a = s.action()?;
    let d = slice.chart.dim();
    let dim = s.dim();
    let m = a.moment_dim();
    let h = s.manifold.default_step();
    let mut level_residual: f64 = 0.0;
    let mut orbit_rank = None;
    for p in slice.chart.grid().points() {
        let u = &p.coords;
        let x = (slice.map)(u);
        let mu = a.moment(&x)?;
        let value = mu.norm();
        if !(value <= LEVEL_TOL) {
            return Err(Error::NotInLevelSet { point: x, value });
        }
        level_residual = level_residual.max(value);
        if numerical_rank(&a.moment_jacobian(&x, h)?, DEFAULT_TOL_RANK) < m {
            return Err(Error::NotRegularValue(x));
        }
        let js = numeric::jacobian(&*slice.map, u, JACOBIAN_STEP);
        if numerical_rank(&js, DEFAULT_TOL_RANK) < d {
            return Err(Error::ParamNotImmersion(u.clone()));
        }
        let fields = a.fields_at(&x);
        let r_orbit = numerical_rank(&fields, DEFAULT_TOL_RANK);
        let mut joint = DMatrix::zeros(dim, d + fields.ncols());
        joint.columns_mut(0, d).copy_from(&js);
        joint.columns_mut(d, fields.ncols()).copy_from(&fields);
        if numerical_rank(&joint, DEFAULT_TOL_RANK) < d + r_orbit {
            return Err(Error::SliceNotTransverse(x));
        }
        // One point per orbit: the slice must be exactly complementary to the orbits in μ⁻¹(0).
        if d + m + r_orbit != dim {
            return Err(Error::SliceNotTransverse(x));
        }
        orbit_rank.get_or_insert(r_orbit);
    }

    let map = slice.map.clone();
    let forms = s.forms.pulled_back(slice.map.clone(), move |u: &[f64]| {
        numeric::jacobian(&*map, u, JACOBIAN_STEP)
    });
    let mut reduced = Scenario::new(&format!("{}/reduced", s.name), slice.chart.clone(), forms);
    reduced
        .diagnostics
        .insert("level_residual".into(), level_residual);
    let classification =
        classify_structure(&reduced.manifold, &reduced.forms, tol_rank, tol_closed)?;
    let closed = verify_closed(
        &reduced.manifold,
        &reduced.forms,
        reduced.manifold.default_step(),
    )?;
    let eta_min_norm = reduced
        .manifold
        .grid()
        .points()
        .iter()
        .map(|p| reduced.forms.eta(&p.coords).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(Reduction {
        scenario: reduced,
        classification,
        level_residual,
        eta_closed_residual: closed.eta,
        eta_min_norm,
    })
}

/// The slice moved by a group element: `u ↦ θ₀ · slice(u)`.
pub fn rotated_slice(s: &Scenario, slice: &SliceParam, theta0: &[f64]) -> Result<SliceParam> {
    let a = s.action()?.clone();
    let (inner, t) = (slice.map.clone(), theta0.to_vec());
    Ok(SliceParam {
        chart: slice.chart.clone(),
        map: std::sync::Arc::new(move |u: &[f64]| a.act(&t, &inner(u))),
    })
}

/// Largest difference between the reduced forms of two reductions over the
/// same slice chart; infinite when the verdicts differ.
pub fn reduction_discrepancy(a: &Reduction, b: &Reduction) -> f64 {
    if a.classification.verdict != b.classification.verdict {
        return f64::INFINITY;
    }
    let grid = a.scenario.manifold.grid();
    numeric::max_or_inf(grid.points().iter().map(|p| {
        let x = &p.coords;
        let dw = (a.scenario.forms.omega(x) - b.scenario.forms.omega(x)).amax();
        let de = (a.scenario.forms.eta(x) - b.scenario.forms.eta(x)).amax();
        dw.max(de)
    }))
}
