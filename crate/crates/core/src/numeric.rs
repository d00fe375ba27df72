//! Field callables and central-difference calculus on chart coordinates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Step used for Jacobians of point maps (actions, parametrizations, projections).
pub const JACOBIAN_STEP: f64 = 1e-6;

fn shifted(x: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += delta;
    y
}

pub fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        (f(&shifted(x, i, h)) - f(&shifted(x, i, -h))) / (2.0 * h)
    })
}

/// Second derivatives by central differences; symmetrized.
pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = f(&shifted(x, i, h));
        let fm = f(&shifted(x, i, -h));
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let pp = f(&shifted(&shifted(x, i, h), j, h));
            let pm = f(&shifted(&shifted(x, i, h), j, -h));
            let mp = f(&shifted(&shifted(x, i, -h), j, h));
            let mm = f(&shifted(&shifted(x, i, -h), j, -h));
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Jacobian of `map` at `x`: rows index outputs, columns index inputs.
pub fn jacobian(map: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..x.len())
        .map(|i| {
            let p = map(&shifted(x, i, h));
            let m = map(&shifted(x, i, -h));
            DVector::from_iterator(p.len(), p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)))
        })
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(map(x).len(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// `a − b`, reduced into `(−P/2, P/2]` when a period `P` is given.
pub fn periodic_difference(a: f64, b: f64, period: Option<f64>) -> f64 {
    match period {
        Some(p) => {
            let d = (a - b).rem_euclid(p);
            if d > p / 2.0 {
                d - p
            } else {
                d
            }
        }
        None => a - b,
    }
}

/// Jacobian of a map whose output coordinates may wrap; output differences
/// are taken modulo `periods`.
pub fn jacobian_periodic(
    map: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    h: f64,
    periods: &[Option<f64>],
) -> DMatrix<f64> {
    let rows = periods.len();
    let mut j = DMatrix::zeros(rows, x.len());
    for i in 0..x.len() {
        let p = map(&shifted(x, i, h));
        let m = map(&shifted(x, i, -h));
        for r in 0..rows {
            j[(r, i)] = periodic_difference(p[r], m[r], periods[r]) / (2.0 * h);
        }
    }
    j
}

/// `∂_i M(x)` for each coordinate `i`.
pub fn matrix_partials(
    field: &dyn Fn(&[f64]) -> DMatrix<f64>,
    x: &[f64],
    h: f64,
) -> Vec<DMatrix<f64>> {
    (0..x.len())
        .map(|i| (field(&shifted(x, i, h)) - field(&shifted(x, i, -h))) / (2.0 * h))
        .collect()
}

/// `∂_i v(x)` for each coordinate `i`.
pub fn vector_partials(
    field: &dyn Fn(&[f64]) -> DVector<f64>,
    x: &[f64],
    h: f64,
) -> Vec<DVector<f64>> {
    (0..x.len())
        .map(|i| (field(&shifted(x, i, h)) - field(&shifted(x, i, -h))) / (2.0 * h))
        .collect()
}

/// Classical RK4 integration of `field` for time `t` with steps no longer than `max_step`.
pub fn rk4_flow(
    field: &dyn Fn(&[f64]) -> DVector<f64>,
    x: &[f64],
    t: f64,
    max_step: f64,
) -> Vec<f64> {
    let steps = (t.abs() / max_step).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut y = DVector::from_column_slice(x);
    for _ in 0..steps {
        let k1 = field(y.as_slice());
        let k2 = field((&y + &k1 * (dt / 2.0)).as_slice());
        let k3 = field((&y + &k2 * (dt / 2.0)).as_slice());
        let k4 = field((&y + &k3 * dt).as_slice());
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    y.as_slice().to_vec()
}

/// Maximum of `values`, with any NaN promoted to +∞ so that it cannot hide a failure.
pub fn max_or_inf(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .map(|v| if v.is_nan() { f64::INFINITY } else { v })
        .fold(0.0, f64::max)
}
