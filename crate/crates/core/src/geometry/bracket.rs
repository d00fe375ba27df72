//! Poisson bracket on basic functions.
//!
//! With `L = −Ω + η ηᵀ` and `L v_f = df`, the bracket is `{f, g} = ω(v_f, v_g)`.
//! Expanding `ω(v_f, ·) = ♭(v_f) − η(v_f) η` gives the identity
//! `{f, g} = df(v_g) − η(v_f) η(v_g)`: the Lie-derivative form `df(v_g)` holds with
//! a plus sign exactly when one of the two functions is Reeb-invariant.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::chart::ChartedManifold;
use super::structure::{basicness_check, FormPair, DEFAULT_BASIC_TOL};
use crate::error::{Error, Result};
use crate::numeric::{self, ScalarField};
use crate::tensor_point::DEFAULT_TOL_RANK;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketOptions {
    /// Central-difference step for `df`.
    pub h: f64,
    pub tol_rank: f64,
    pub basic_tol: f64,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            h: 1e-4,
            tol_rank: DEFAULT_TOL_RANK,
            basic_tol: DEFAULT_BASIC_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketValue {
    /// `ω(v_f, v_g)`.
    pub value: f64,
    /// `df(v_g)`, the Lie-derivative expression.
    pub lie_derivative: f64,
    /// `η(v_f) η(v_g)`.
    pub reeb_correction: f64,
    /// `|value − lie_derivative|`.
    pub lie_discrepancy: f64,
    /// `|value − (lie_derivative − reeb_correction)|`; zero up to rounding.
    pub identity_residual: f64,
    #[serde(skip)]
    pub v_f: DVector<f64>,
    #[serde(skip)]
    pub v_g: DVector<f64>,
}

/// Minimum-norm least-squares solution of `L v = rhs`.
pub fn min_norm_solve(
    flat: &DMatrix<f64>,
    rhs: &DVector<f64>,
    tol_rank: f64,
) -> Result<DVector<f64>> {
    let svd = flat.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let cutoff = tol_rank * svd.singular_values.max();
    let mut coeffs = u.transpose() * rhs;
    for (c, &s) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c = if s > cutoff && s > 0.0 { *c / s } else { 0.0 };
    }
    let v = v_t.transpose() * coeffs;
    let residual = (flat * &v - rhs).norm();
    if residual > 1e-8 * rhs.norm().max(1.0) {
        return Err(Error::NoSolution(residual));
    }
    Ok(v)
}

/// A representative `v` with `♭(v) = df` at `x` (minimum norm).
pub fn hamiltonian_vector(
    forms: &FormPair,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    opts: &BracketOptions,
) -> Result<DVector<f64>> {
    let df = numeric::gradient(f, x, opts.h);
    min_norm_solve(&forms.flat(x), &df, opts.tol_rank)
}

pub fn poisson_bracket(
    manifold: &ChartedManifold,
    forms: &FormPair,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    opts: &BracketOptions,
) -> Result<BracketValue> {
    if !basicness_check(manifold, forms, f, x, opts.basic_tol) {
        return Err(Error::NotBasic("f"));
    }
    if !basicness_check(manifold, forms, g, x, opts.basic_tol) {
        return Err(Error::NotBasic("g"));
    }
    let v_f = hamiltonian_vector(forms, f, x, opts)?;
    let v_g = hamiltonian_vector(forms, g, x, opts)?;
    let omega = forms.omega(x);
    let eta = forms.eta(x);
    let value = (v_f.transpose() * &omega * &v_g)[(0, 0)];
    let lie_derivative = numeric::gradient(f, x, opts.h).dot(&v_g);
    let reeb_correction = eta.dot(&v_f) * eta.dot(&v_g);
    Ok(BracketValue {
        value,
        lie_derivative,
        reeb_correction,
        lie_discrepancy: (value - lie_derivative).abs(),
        identity_residual: (value - (lie_derivative - reeb_correction)).abs(),
        v_f,
        v_g,
    })
}

/// `{f, g}` as a scalar field; points where the bracket is undefined map to NaN.
pub fn bracket_function(
    manifold: &ChartedManifold,
    forms: &FormPair,
    f: ScalarField,
    g: ScalarField,
    opts: BracketOptions,
) -> ScalarField {
    let (manifold, forms) = (manifold.clone(), forms.clone());
    Arc::new(move |x: &[f64]| {
        poisson_bracket(&manifold, &forms, &*f, &*g, x, &opts)
            .map(|b| b.value)
            .unwrap_or(f64::NAN)
    })
}
