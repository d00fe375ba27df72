use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::constructions::Scenario;
use crate::error::{Error, Result};
use crate::numeric::{self, JACOBIAN_STEP};
use crate::tensor_point::{kernel_basis, subspace_relation, SubspaceRelation, DEFAULT_TOL_RANK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrowReport {
    /// `max |s*ω − t*ω|` over the sampled arrows.
    pub basic_residual: f64,
    /// `max |ω̃ − s*ω|` and `|η̃ − s*η|`; zero when the arrow forms are the pullbacks.
    pub form_residual: f64,
    pub kernel_mismatches: usize,
    pub points_checked: usize,
    pub passes: bool,
}

/// Compares `ker ♭̃` with `ker ds + ker dt` at random arrows.
pub fn arrow_space_check<R: Rng + ?Sized>(
    s: &Scenario,
    points: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ArrowReport> {
    let g = s
        .arrows
        .as_ref()
        .ok_or_else(|| Error::NotSubmersionGroupoidShape("scenario has no arrow chart".into()))?;
    let base_dim = s.manifold.dim();
    let probe = g.arrows.random_point(rng);
    for (name, map) in [("source", &g.source), ("target", &g.target)] {
        if map(&probe).len() != base_dim {
            return Err(Error::NotSubmersionGroupoidShape(format!(
                "{name} does not land in the {base_dim}-dimensional base"
            )));
        }
    }

    let mut basic_residual: f64 = 0.0;
    let mut form_residual: f64 = 0.0;
    let mut kernel_mismatches = 0;
    for _ in 0..points {
        let p = g.arrows.random_point(rng);
        let js = numeric::jacobian(&*g.source, &p, JACOBIAN_STEP);
        let jt = numeric::jacobian(&*g.target, &p, JACOBIAN_STEP);
        let (sp, tp) = ((g.source)(&p), (g.target)(&p));
        let s_omega = js.transpose() * s.forms.omega(&sp) * &js;
        let t_omega = jt.transpose() * s.forms.omega(&tp) * &jt;
        let s_eta = js.transpose() * s.forms.eta(&sp);
        basic_residual = basic_residual.max(nan_inf((&s_omega - &t_omega).amax()));

        let (omega, eta) = match &g.arrow_forms {
            Some(f) => {
                let (o, e) = (f.omega(&p), f.eta(&p));
                form_residual = form_residual
                    .max(nan_inf((&o - &s_omega).amax()))
                    .max(nan_inf((&e - &s_eta).amax()));
                (o, e)
            }
            None => (s_omega, s_eta),
        };
        let flat: DMatrix<f64> = -omega + &eta * eta.transpose();
        let ker_flat = kernel_basis(&flat, DEFAULT_TOL_RANK);
        let ker_ds = kernel_basis(&js, DEFAULT_TOL_RANK);
        let ker_dt = kernel_basis(&jt, DEFAULT_TOL_RANK);
        let sum = ker_ds.sum(&ker_dt, DEFAULT_TOL_RANK)?;
        if subspace_relation(&ker_flat, &sum, 1e-8)? != SubspaceRelation::Equal {
            kernel_mismatches += 1;
        }
    }
    Ok(ArrowReport {
        basic_residual,
        form_residual,
        kernel_mismatches,
        points_checked: points,
        passes: basic_residual <= tol && form_residual <= tol && kernel_mismatches == 0,
    })
}

fn nan_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
