use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::Scenario;
use crate::error::{Error, Result};
use crate::geometry::ChartedManifold;
use crate::hamiltonian::{standard_generator, TorusActionSpec};
use crate::numeric::{self, PointMap, VectorField, JACOBIAN_STEP};
use crate::tensor_point::{numerical_rank, DEFAULT_TOL_RANK};

const LEVEL_TOL: f64 = 1e-8;

/// Chart on a submanifold together with its embedding into the ambient
/// chart. The inverse is needed only to carry the torus action along.
#[derive(Clone)]
pub struct Parametrization {
    pub chart: ChartedManifold,
    pub map: PointMap,
    pub inverse: Option<PointMap>,
}

/// Generators `e_i` completing the rows of `rows` to a basis of `ℝⁿ`.
fn complementary_generators(rows: &DMatrix<f64>, n: usize) -> Vec<Vec<f64>> {
    let mut current = rows.clone();
    let mut rank = numerical_rank(&current, DEFAULT_TOL_RANK);
    let mut out = Vec::new();
    for i in 0..n {
        let e = standard_generator(n, i);
        let mut trial = current.clone().insert_row(current.nrows(), 0.0);
        trial.row_mut(current.nrows()).copy_from_slice(&e);
        let r = numerical_rank(&trial, DEFAULT_TOL_RANK);
        if r > rank {
            current = trial;
            rank = r;
            out.push(e);
        }
    }
    out
}

fn least_squares(j: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    j.clone()
        .svd(true, true)
        .solve(b, 1e-12)
        .unwrap_or_else(|_| DVector::from_element(j.ncols(), f64::NAN))
}

/// Restricts `ambient` to `{μ^ν = 0 : ν a row of subtorus}` through `param`.
///
/// The result carries the pulled-back forms and, when `param.inverse` is
/// given, the torus action with moment map in the complementary coordinates.
pub fn level_set_structure(
    ambient: &Scenario,
    subtorus: &[Vec<i64>],
    param: &Parametrization,
) -> Result<Scenario> {
    let action = ambient.action()?;
    if !action.has_moment_map() {
        return Err(Error::NoMomentMap);
    }
    let n = action.torus_rank();
    if subtorus.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "subtorus rows must have length {n}"
        )));
    }
    let coefficients = subtorus
        .iter()
        .map(|r| action.moment_coefficients(&r.iter().map(|&v| v as f64).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let d = param.chart.dim();
    let map = param.map.clone();

    let grid = param.chart.grid();
    let checks: Vec<Result<f64>> = grid
        .points()
        .par_iter()
        .map(|p| {
            let x = map(&p.coords);
            let mu = action.moment(&x)?;
            let value = coefficients
                .iter()
                .map(|c| c.dot(&mu).powi(2))
                .sum::<f64>()
                .sqrt();
            if !(value <= LEVEL_TOL) {
                return Err(Error::NotInLevelSet { point: x, value });
            }
            let j = numeric::jacobian(&*map, &p.coords, JACOBIAN_STEP);
            if numerical_rank(&j, DEFAULT_TOL_RANK) < d {
                return Err(Error::ParamNotImmersion(p.coords.clone()));
            }
            Ok(value)
        })
        .collect();
    let level_residual = numeric::max_or_inf(checks.into_iter().collect::<Result<Vec<_>>>()?);

    let jac_map = map.clone();
    let forms = ambient.forms.pulled_back(map.clone(), move |u: &[f64]| {
        numeric::jacobian(&*jac_map, u, JACOBIAN_STEP)
    });
    let mut scenario = Scenario::new(
        &format!("{}/level", ambient.name),
        param.chart.clone(),
        forms,
    );
    scenario
        .diagnostics
        .insert("level_set_residual".into(), level_residual);

    if let Some(inverse) = &param.inverse {
        let rows = DMatrix::from_fn(subtorus.len(), n, |i, j| subtorus[i][j] as f64);
        let complement = complementary_generators(&rows, n);
        let comp_coeffs = complement
            .iter()
            .map(|e| action.moment_coefficients(e))
            .collect::<Result<Vec<_>>>()?;
        let basis = DMatrix::from_fn(complement.len(), n, |i, j| complement[i][j]);

        let (act_amb, map_a, inv) = (action.action_map().clone(), map.clone(), inverse.clone());
        let act = Arc::new(move |theta: &[f64], u: &[f64]| inv(&act_amb(theta, &map_a(u))));
        let fields: Vec<VectorField> = action
            .fundamental_fields()
            .iter()
            .map(|f| {
                let (f, m) = (f.clone(), map.clone());
                let field: VectorField = Arc::new(move |u: &[f64]| {
                    let j = numeric::jacobian(&*m, u, JACOBIAN_STEP);
                    least_squares(&j, &f(&m(u)))
                });
                field
            })
            .collect();
        let mu_amb = action.moment_map().cloned().ok_or(Error::NoMomentMap)?;
        let m = map.clone();
        let moment = Arc::new(move |u: &[f64]| {
            let mu = mu_amb(&m(u));
            DVector::from_iterator(comp_coeffs.len(), comp_coeffs.iter().map(|c| c.dot(&mu)))
        });
        scenario.action = Some(
            TorusActionSpec::new(n, act, fields)?
                .with_subtorus(subtorus.to_vec())?
                .with_moment_map(basis, moment)?
                .declare_proper(action.proper_declared),
        );
    }
    Ok(scenario)
}
