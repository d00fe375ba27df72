use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::standard_generator;
use crate::constructions::Scenario;
use crate::error::{Error, Result};
use crate::geometry::StructureClassification;
use crate::numeric::{self, JACOBIAN_STEP};
use crate::tensor_point::{
    kernel_basis, subspace_relation, SubspaceBasis, SubspaceRelation, DEFAULT_TOL_RANK,
};

/// Default tolerance for action and moment-map residuals.
pub const DEFAULT_TOL_ACTION: f64 = 1e-6;
const MAX_POINTS: usize = 2000;
const NULL_IDEAL_POINTS: usize = 500;

/// Fixed group elements used for the invariance of `μ`.
fn invariance_samples(n: usize) -> Vec<Vec<f64>> {
    (1..=5)
        .map(|s| {
            (0..n)
                .map(|i| (0.61 * s as f64 + 0.93 * i as f64) % std::f64::consts::TAU)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionValidation {
    /// `max ‖act(0, x) − x‖`.
    pub identity_residual: f64,
    /// `max ‖act(θ, act(θ′, x)) − act(θ + θ′, x)‖`.
    pub composition_residual: f64,
    /// `max ‖ξ_{i,M}(x) − d/dt act(t e_i, x)‖`.
    pub field_residual: f64,
    pub passes: bool,
}

/// Group-action axioms and fundamental fields on random points and angles.
pub fn validate_action<R: Rng + ?Sized>(
    s: &Scenario,
    samples: usize,
    rng: &mut R,
) -> Result<ActionValidation> {
    let a = s.action()?;
    let m = &s.manifold;
    let n = a.torus_rank();
    let periods = m.periods();
    let (mut id, mut comp, mut field): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x = m.random_point(rng);
        let t1: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let t2: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        id = id.max(m.separation(&a.act(&vec![0.0; n], &x), &x));
        let sum: Vec<f64> = t1
            .iter()
            .zip(&t2)
            .map(|(u, v)| (u + v) % std::f64::consts::TAU)
            .collect();
        comp = comp.max(m.separation(&a.act(&t1, &a.act(&t2, &x)), &a.act(&sum, &x)));
        for i in 0..n {
            let flow = |t: &[f64]| {
                let mut g = vec![0.0; n];
                g[i] = t[0];
                a.act(&g, &x)
            };
            let d = numeric::jacobian_periodic(&flow, &[0.0], JACOBIAN_STEP, &periods);
            field = field.max((d.column(0) - a.fundamental_fields()[i](&x)).amax());
        }
    }
    Ok(ActionValidation {
        identity_residual: id,
        composition_residual: comp,
        field_residual: field,
        passes: id <= 1e-12 && comp <= 1e-9 && field <= 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionReport {
    /// `max |Jᵀ Ω(θ·x) J − Ω(x)|`.
    pub omega_residual: f64,
    /// `max |Jᵀ η(θ·x) − η(x)|`.
    pub eta_residual: f64,
    pub points_checked: usize,
    pub group_samples: usize,
    pub passes: bool,
}

/// `θ*ω = ω` and `θ*η = η` for each sampled `θ` on the grid.
pub fn verify_precosymplectic_action(
    s: &Scenario,
    group_samples: &[Vec<f64>],
    tol: f64,
) -> Result<ActionReport> {
    let a = s.action()?;
    let periods = s.manifold.periods();
    let grid = s.manifold.grid();
    let points = grid.thinned(MAX_POINTS);
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            let x = &p.coords;
            let (om, et) = (s.forms.omega(x), s.forms.eta(x));
            group_samples
                .iter()
                .fold((0.0f64, 0.0f64), |(ro, re), theta| {
                    let j = numeric::jacobian_periodic(
                        &|y| a.act(theta, y),
                        x,
                        JACOBIAN_STEP,
                        &periods,
                    );
                    let y = a.act(theta, x);
                    let dw = (j.transpose() * s.forms.omega(&y) * &j - &om).amax();
                    let de = (j.transpose() * s.forms.eta(&y) - &et).amax();
                    (ro.max(nan_inf(dw)), re.max(nan_inf(de)))
                })
        })
        .collect();
    let omega_residual = numeric::max_or_inf(per_point.iter().map(|r| r.0));
    let eta_residual = numeric::max_or_inf(per_point.iter().map(|r| r.1));
    Ok(ActionReport {
        omega_residual,
        eta_residual,
        points_checked: per_point.len(),
        group_samples: group_samples.len(),
        passes: omega_residual <= tol && eta_residual <= tol,
    })
}

fn nan_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentMapReport {
    /// `max |η(ξ_M)|` over standard generators.
    pub eta_residual: f64,
    /// `max ‖dμ^ξ − ι_{ξ_M}ω‖`.
    pub moment_residual: f64,
    /// `max |μ(θ·x) − μ(x)|`.
    pub invariance_residual: f64,
    /// `max |dμ^ξ(v)|` for `v ∈ ker ♭`; `μ` descends along the leaves.
    pub descent_residual: f64,
    pub points_checked: usize,
    pub passes: bool,
}

/// `η(ξ_M) = 0`, `dμ^ξ = ι_{ξ_M}ω` and invariance of `μ` on the grid.
pub fn verify_moment_map(s: &Scenario, tol: f64) -> Result<MomentMapReport> {
    let a = s.action()?;
    if !a.has_moment_map() {
        return Err(Error::NoMomentMap);
    }
    let n = a.torus_rank();
    let coefficients = (0..n)
        .map(|i| a.moment_coefficients(&standard_generator(n, i)))
        .collect::<Result<Vec<_>>>()?;
    let thetas = invariance_samples(n);
    let h = s.manifold.default_step();
    let grid = s.manifold.grid();
    let points = grid.thinned(MAX_POINTS);
    let per_point: Vec<Result<[f64; 4]>> = points
        .par_iter()
        .map(|p| {
            let x = &p.coords;
            let (om, eta) = (s.forms.omega(x), s.forms.eta(x));
            let jac = a.moment_jacobian(x, h)?;
            let kernel = kernel_basis(&s.forms.flat(x), DEFAULT_TOL_RANK);
            let mut r = [0.0f64; 4];
            for (i, c) in coefficients.iter().enumerate() {
                let xi_m = a.fundamental_fields()[i](x);
                let d_mu = jac.transpose() * c;
                r[0] = r[0].max(nan_inf(eta.dot(&xi_m).abs()));
                r[1] = r[1].max(nan_inf((&d_mu + &om * &xi_m).amax()));
                for v in kernel.vectors() {
                    r[3] = r[3].max(nan_inf(d_mu.dot(&v).abs()));
                }
            }
            let mu = a.moment(x)?;
            for t in &thetas {
                let moved = a.moment(&a.act(t, x))?;
                r[2] = r[2].max(nan_inf((moved - &mu).amax()));
            }
            Ok(r)
        })
        .collect();
    let per_point = per_point.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |k: usize| numeric::max_or_inf(per_point.iter().map(|r| r[k]));
    let (e, m, i, d) = (col(0), col(1), col(2), col(3));
    Ok(MomentMapReport {
        eta_residual: e,
        moment_residual: m,
        invariance_residual: i,
        descent_residual: d,
        points_checked: per_point.len(),
        passes: e <= tol && m <= tol && i <= tol && d <= tol,
    })
}

/// The null ideal `𝔫 = {ξ : ♭(ξ_M) = 0 everywhere}` detected from samples,
/// compared with the declared subtorus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullIdeal {
    #[serde(skip)]
    pub detected: SubspaceBasis,
    #[serde(skip)]
    pub declared: SubspaceBasis,
    pub detected_dim: usize,
    pub declared_dim: usize,
    pub relation: SubspaceRelation,
    pub matches_declared: bool,
}

pub fn detect_null_ideal(s: &Scenario, tol: f64) -> Result<NullIdeal> {
    let a = s.action()?;
    let n = a.torus_rank();
    let grid = s.manifold.grid();
    let points = grid.thinned(NULL_IDEAL_POINTS);
    let blocks: Vec<DMatrix<f64>> = points
        .par_iter()
        .map(|p| s.forms.flat(&p.coords) * a.fields_at(&p.coords))
        .collect();
    let dim = s.dim();
    let mut stacked = DMatrix::zeros(dim * blocks.len(), n);
    for (b, block) in blocks.iter().enumerate() {
        stacked.view_mut((b * dim, 0), (dim, n)).copy_from(block);
    }
    // Singular values below `tol` count as null directions.
    let smax = stacked.singular_values().max();
    let detected = if smax <= tol {
        SubspaceBasis::full(n)
    } else {
        kernel_basis(&stacked, tol / smax)
    };
    let rows: Vec<_> = a
        .subtorus()
        .iter()
        .map(|r| nalgebra::DVector::from_iterator(n, r.iter().map(|&v| v as f64)))
        .collect();
    let declared = SubspaceBasis::span(n, &rows, DEFAULT_TOL_RANK)?;
    let relation = subspace_relation(&detected, &declared, 1e-8)?;
    Ok(NullIdeal {
        detected_dim: detected.rank(),
        declared_dim: declared.rank(),
        matches_declared: relation == SubspaceRelation::Equal,
        relation,
        detected,
        declared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanReport {
    pub null_orbit_dim: usize,
    pub orbit_dim: usize,
    pub foliation_dim: usize,
    pub intersection_dim: usize,
    pub relation: SubspaceRelation,
    pub passes: bool,
}

/// `T_x(N·x) = T_x(K·x) ∩ T_x F_♭` at `x`.
pub fn clean_action_check(
    s: &Scenario,
    classification: Option<&StructureClassification>,
    null: &NullIdeal,
    x: &[f64],
    tol: f64,
) -> Result<CleanReport> {
    match classification {
        Some(c) if c.verdict.is_structure() => {}
        Some(c) => return Err(Error::NotClassified(c.verdict.to_string())),
        None => return Err(Error::NotClassified("no classification available".into())),
    }
    let a = s.action()?;
    let dim = s.dim();
    let null_vectors: Vec<_> = null
        .detected
        .vectors()
        .map(|xi| a.fundamental_field(xi.as_slice(), x))
        .collect();
    let null_orbit = SubspaceBasis::span(dim, &null_vectors, DEFAULT_TOL_RANK)?;
    let all: Vec<_> = a.fundamental_fields().iter().map(|f| f(x)).collect();
    let orbit = SubspaceBasis::span(dim, &all, DEFAULT_TOL_RANK)?;
    let foliation = kernel_basis(&s.forms.flat(x), DEFAULT_TOL_RANK);
    let cap = orbit.intersection(&foliation, DEFAULT_TOL_RANK)?;
    let relation = subspace_relation(&null_orbit, &cap, tol)?;
    Ok(CleanReport {
        null_orbit_dim: null_orbit.rank(),
        orbit_dim: orbit.rank(),
        foliation_dim: foliation.rank(),
        intersection_dim: cap.rank(),
        passes: relation == SubspaceRelation::Equal,
        relation,
    })
}
