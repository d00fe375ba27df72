use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{Axis, ChartedManifold, FormPair};
use crate::groupoid::HolonomyProbe;
use crate::hamiltonian::TorusActionSpec;
use crate::numeric::{self, MatrixField, PointMap, VectorField, JACOBIAN_STEP};

/// Largest admissible `|φ*ω_S − ω_S|` on the base grid.
pub const SYMPLECTOMORPHISM_TOL: f64 = 1e-8;
const EQUIVARIANCE_TOL: f64 = 1e-8;
const EQUIVARIANCE_POINTS: usize = 500;

/// Base data of `S_φ = (S × ℝ)/ℤ` with `n·(x, r) = (φⁿ(x), r + n)`.
#[derive(Clone)]
pub struct MappingTorusSpec {
    pub name: String,
    pub base: ChartedManifold,
    pub omega_s: MatrixField,
    pub phi: PointMap,
    pub theta_count: usize,
    /// Torus action on the base, lifted fibrewise when it commutes with `φ`.
    pub base_action: Option<TorusActionSpec>,
    pub holonomy_test_point: Option<Vec<f64>>,
    phi_checked: bool,
    pullback_residual: f64,
}

impl MappingTorusSpec {
    pub fn new(
        name: &str,
        base: ChartedManifold,
        omega_s: MatrixField,
        phi: PointMap,
    ) -> Result<Self> {
        if base.dim() % 2 == 1 {
            return Err(Error::OddBaseDim(base.dim()));
        }
        Ok(Self {
            name: name.into(),
            base,
            omega_s,
            phi,
            theta_count: 4,
            base_action: None,
            holonomy_test_point: None,
            phi_checked: false,
            pullback_residual: f64::NAN,
        })
    }

    pub fn with_action(mut self, action: TorusActionSpec) -> Self {
        self.base_action = Some(action);
        self
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// Computes `max |Jᵀ Ω_S(φ(x)) J − Ω_S(x)|` over the base grid.
    pub fn check(&mut self) -> f64 {
        let residuals: Vec<f64> = self
            .base
            .grid()
            .points()
            .par_iter()
            .map(|p| {
                let x = &p.coords;
                let j = numeric::jacobian(&*self.phi, x, JACOBIAN_STEP);
                let pulled = j.transpose() * (self.omega_s)(&(self.phi)(x)) * &j;
                (pulled - (self.omega_s)(x)).amax()
            })
            .collect();
        self.pullback_residual = numeric::max_or_inf(residuals);
        self.phi_checked = self.pullback_residual <= SYMPLECTOMORPHISM_TOL;
        self.pullback_residual
    }

    pub fn phi_checked(&self) -> bool {
        self.phi_checked
    }

    pub fn pullback_residual(&self) -> f64 {
        self.pullback_residual
    }
}

fn equivariance_residual(spec: &MappingTorusSpec, action: &TorusActionSpec) -> f64 {
    let n = action.torus_rank();
    let thetas: Vec<Vec<f64>> = (1..=5)
        .map(|s| (0..n).map(|i| 0.37 * s as f64 + 1.1 * i as f64).collect())
        .collect();
    let grid = spec.base.grid();
    let res: Vec<f64> = grid
        .thinned(EQUIVARIANCE_POINTS)
        .par_iter()
        .map(|p| {
            let x = &p.coords;
            thetas
                .iter()
                .map(|t| {
                    let a = (spec.phi)(&action.act(t, x));
                    let b = action.act(t, &(spec.phi)(x));
                    a.iter()
                        .zip(&b)
                        .map(|(u, v)| (u - v).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    numeric::max_or_inf(res)
}

fn lift_action(action: &TorusActionSpec, d: usize) -> Result<TorusActionSpec> {
    let base_act = action.action_map().clone();
    let act = Arc::new(move |theta: &[f64], x: &[f64]| {
        let mut y = base_act(theta, &x[..d]);
        y.push(x[d]);
        y
    });
    let fields: Vec<VectorField> = action
        .fundamental_fields()
        .iter()
        .map(|f| {
            let f = f.clone();
            let lifted: VectorField = Arc::new(move |x: &[f64]| {
                let v = f(&x[..d]);
                DVector::from_fn(d + 1, |i, _| if i < d { v[i] } else { 0.0 })
            });
            lifted
        })
        .collect();
    let mut lifted = TorusActionSpec::new(action.torus_rank(), act, fields)?
        .with_subtorus(action.subtorus().to_vec())?
        .declare_proper(action.proper_declared);
    if let Some(mu) = action.moment_map() {
        let mu = mu.clone();
        lifted = lifted.with_moment_map(
            action.moment_basis().clone(),
            Arc::new(move |x: &[f64]| mu(&x[..d])),
        )?;
    }
    Ok(lifted)
}

/// Builds the mapping torus on the fundamental domain `S × [0, 1)` with
/// `ω = pr*ω_S` and `η = dθ`.
pub fn mapping_torus(spec: &MappingTorusSpec) -> Result<Scenario> {
    let mut spec = spec.clone();
    let d = spec.base_dim();
    if d % 2 == 1 {
        return Err(Error::OddBaseDim(d));
    }
    let residual = spec.check();
    if !spec.phi_checked() {
        return Err(Error::NotSymplectomorphism(residual));
    }

    let manifold = spec.base.product(&ChartedManifold::new(vec![Axis::circle(
        "theta",
        1.0,
        spec.theta_count,
    )])?);
    let omega_s = spec.omega_s.clone();
    let forms = FormPair::new(
        move |x: &[f64]| {
            let mut m = DMatrix::zeros(d + 1, d + 1);
            m.view_mut((0, 0), (d, d)).copy_from(&omega_s(&x[..d]));
            m
        },
        move |_x: &[f64]| DVector::from_fn(d + 1, |i, _| if i == d { 1.0 } else { 0.0 }),
    );

    // Seam: (x, 1⁻) is glued to (φ(x), 0⁺); ω must agree with the pullback there.
    let phi = spec.phi.clone();
    let seam: Vec<f64> = spec
        .base
        .grid()
        .points()
        .par_iter()
        .map(|p| {
            let mut before = p.coords.clone();
            before.push(1.0 - 1e-12);
            let mut after = phi(&p.coords);
            after.push(0.0);
            let jb = numeric::jacobian(&*phi, &p.coords, JACOBIAN_STEP);
            let mut j = DMatrix::identity(d + 1, d + 1);
            j.view_mut((0, 0), (d, d)).copy_from(&jb);
            let dw = (j.transpose() * forms.omega(&after) * &j - forms.omega(&before)).amax();
            let de = (j.transpose() * forms.eta(&after) - forms.eta(&before)).amax();
            dw.max(de)
        })
        .collect();

    let mut scenario = Scenario::new(&spec.name, manifold, forms);
    scenario
        .diagnostics
        .insert("symplectomorphism_residual".into(), residual);
    scenario
        .diagnostics
        .insert("seam_residual".into(), numeric::max_or_inf(seam));

    if let Some(action) = &spec.base_action {
        let eq = equivariance_residual(&spec, action);
        if !(eq <= EQUIVARIANCE_TOL) {
            return Err(Error::NotEquivariant(eq));
        }
        scenario
            .diagnostics
            .insert("equivariance_residual".into(), eq);
        scenario.action = Some(lift_action(action, d)?);
    }

    let test_point = spec.holonomy_test_point.clone().unwrap_or_else(|| {
        [0.1, 0.05, 0.07, 0.03, 0.04, 0.06][..d.min(6)]
            .iter()
            .copied()
            .chain(std::iter::repeat(0.05))
            .take(d)
            .collect()
    });
    scenario.holonomy = Some(HolonomyProbe {
        label: "return map of the closed Reeb orbit through the origin".into(),
        return_map: spec.phi.clone(),
        test_point,
    });
    Ok(scenario)
}
