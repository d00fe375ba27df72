use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::FoliationSpec;
use crate::constructions::Scenario;
use crate::error::{Error, Result};
use crate::numeric;
use crate::tensor_point::{
    kernel_basis, numerical_rank, subspace_relation, SubspaceBasis, SubspaceRelation,
    DEFAULT_TOL_RANK,
};

/// RK4 step for leaf flows without an exact flow.
pub const FLOW_STEP: f64 = 1e-2;
/// Largest flow time of one segment of a random word.
pub const MAX_SEGMENT_TIME: f64 = 0.1;
const MAX_SEGMENTS: usize = 3;
const BASIC_MAX_POINTS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiIsoReport {
    pub foliation_rank: usize,
    pub anchor_rank: usize,
    pub kernel_rank: usize,
    pub anchor_injective: bool,
    pub relation: SubspaceRelation,
    pub passes: bool,
}

fn foliation(s: &Scenario) -> Result<&FoliationSpec> {
    s.foliation.as_ref().ok_or(Error::NoFoliation)
}

/// `ρ_x` injective and `ker ♭_x = im ρ_x`.
pub fn quasi_iso_check(s: &Scenario, x: &[f64], tol: f64) -> Result<QuasiIsoReport> {
    let fol = foliation(s)?;
    let dim = s.manifold.dim();
    let vectors = fol.vectors_at(x);
    let anchor_rank = if vectors.is_empty() {
        0
    } else {
        numerical_rank(&DMatrix::from_columns(&vectors), DEFAULT_TOL_RANK)
    };
    let image = SubspaceBasis::span(dim, &vectors, DEFAULT_TOL_RANK)?;
    let kernel = kernel_basis(&s.forms.flat(x), DEFAULT_TOL_RANK);
    let relation = subspace_relation(&image, &kernel, tol)?;
    let anchor_injective = anchor_rank == fol.rank();
    Ok(QuasiIsoReport {
        foliation_rank: fol.rank(),
        anchor_rank,
        kernel_rank: kernel.rank(),
        anchor_injective,
        relation,
        passes: anchor_injective && relation == SubspaceRelation::Equal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasicFormReport {
    /// `max ‖ι_v ω‖` over spanning fields and grid points.
    pub horizontal_omega: f64,
    /// `max |η(v)|`.
    pub horizontal_eta: f64,
    /// `max |d(ι_v ω)|`; equals `|L_v ω|` once `dω = 0`.
    pub invariance_omega: f64,
    /// `max |d(η(v))|`.
    pub invariance_eta: f64,
    pub points_checked: usize,
    pub passes: bool,
}

fn exterior_derivative_residual(
    covector: &dyn Fn(&[f64]) -> DVector<f64>,
    x: &[f64],
    h: f64,
) -> f64 {
    let partials = numeric::vector_partials(covector, x, h);
    let n = x.len();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            r = r.max((partials[i][j] - partials[j][i]).abs());
        }
    }
    r
}

/// Horizontality and invariance of `(ω, η)` along the spanning fields.
pub fn basic_form_check(s: &Scenario, tol: f64) -> Result<BasicFormReport> {
    let fol = foliation(s)?;
    let h = s.manifold.default_step();
    let grid = s.manifold.grid();
    let points = grid.thinned(BASIC_MAX_POINTS);
    let per_point: Vec<[f64; 4]> = points
        .par_iter()
        .map(|p| {
            let x = &p.coords;
            let mut r = [0.0f64; 4];
            for field in fol.spanning_fields() {
                let v = field(x);
                r[0] = r[0].max((s.forms.omega(x) * &v).norm());
                r[1] = r[1].max(s.forms.eta(x).dot(&v).abs());
                let contraction = |y: &[f64]| -(s.forms.omega(y) * field(y));
                r[2] = r[2].max(exterior_derivative_residual(&contraction, x, h));
                let pairing = |y: &[f64]| s.forms.eta(y).dot(&field(y));
                r[3] = r[3].max(numeric::gradient(&pairing, x, h).amax());
            }
            r
        })
        .collect();
    let col = |k: usize| numeric::max_or_inf(per_point.iter().map(|r| r[k]));
    let (ho, he, io, ie) = (col(0), col(1), col(2), col(3));
    Ok(BasicFormReport {
        horizontal_omega: ho,
        horizontal_eta: he,
        invariance_omega: io,
        invariance_eta: ie,
        points_checked: per_point.len(),
        passes: ho <= tol && he <= tol && io <= tol && ie <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub leaf_points: Vec<Vec<f64>>,
    /// Index into `leaf_points` of the first point where the check failed.
    pub first_failure: Option<usize>,
    pub passes: bool,
}

fn flow_segment(
    s: &Scenario,
    fol: &FoliationSpec,
    field: usize,
    t: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let y = match fol.leaf_flow() {
        Some(flow) => flow(field, t, x),
        None => numeric::rk4_flow(&*fol.spanning_fields()[field], x, t, FLOW_STEP),
    };
    let y = s.manifold.wrap(&y);
    if !s.manifold.contains(&y) {
        return Err(Error::FlowLeftChart(y));
    }
    Ok(y)
}

/// Walks `steps` points along the leaf through `x` by random words in the
/// spanning fields and runs [`quasi_iso_check`] at each.
pub fn orbit_invariance_check<R: Rng + ?Sized>(
    s: &Scenario,
    x: &[f64],
    steps: usize,
    tol: f64,
    rng: &mut R,
) -> Result<OrbitReport> {
    let fol = foliation(s)?;
    let mut leaf_points = Vec::with_capacity(steps);
    let mut current = x.to_vec();
    for _ in 0..steps {
        if fol.rank() > 0 {
            let segments = rng.random_range(1..=MAX_SEGMENTS);
            for _ in 0..segments {
                let field = rng.random_range(0..fol.rank());
                let t = rng.random_range(-MAX_SEGMENT_TIME..=MAX_SEGMENT_TIME);
                current = flow_segment(s, fol, field, t, &current)?;
            }
        }
        leaf_points.push(current.clone());
    }
    let mut first_failure = None;
    for (i, p) in leaf_points.iter().enumerate() {
        if !quasi_iso_check(s, p, tol)?.passes {
            first_failure = Some(i);
            break;
        }
    }
    Ok(OrbitReport {
        passes: first_failure.is_none(),
        leaf_points,
        first_failure,
    })
}
