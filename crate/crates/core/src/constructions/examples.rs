use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::level_set::{level_set_structure, Parametrization};
use super::mapping_torus::{mapping_torus, MappingTorusSpec};
use super::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{Axis, ChartedManifold, FormPair};
use crate::groupoid::{FoliationSpec, HolonomyProbe, SubmersionGroupoid};
use crate::hamiltonian::{SliceParam, TorusActionSpec};
use crate::numeric::{PointMap, VectorField};

/// ℂ factors are truncated to disks of this radius.
pub const COMPLEX_DISK_RADIUS: f64 = 2.0;
const XY_COUNT: usize = 9;
const ANGLE_COUNT: usize = 4;
const SLICE_COUNT: usize = 16;

/// `Σ −2 dx∧dy` over the listed coordinate pairs, i.e. `Σ dz∧dz̄ / i`.
///
/// With the rotation field `(−y, x)` this normalization makes `|z|² − 1` a
/// moment map on the nose.
pub fn complex_factor_omega(dim: usize, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &(i, j) in pairs {
        m[(i, j)] = -2.0;
        m[(j, i)] = 2.0;
    }
    m
}

pub fn rotate_pair(x: &mut [f64], i: usize, j: usize, angle: f64) {
    let (c, s) = (angle.cos(), angle.sin());
    let (a, b) = (x[i], x[j]);
    x[i] = c * a - s * b;
    x[j] = s * a + c * b;
}

fn unit(dim: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 })
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

fn cube(names: &[&str], count: usize) -> Result<ChartedManifold> {
    ChartedManifold::new(
        names
            .iter()
            .map(|n| Axis::interval(n, -1.0, 1.0, count))
            .collect(),
    )
}

/// Complex-plane chart factors `(x_j, y_j)` with disk truncations.
fn complex_axes(first_index: usize, factors: usize) -> Vec<Axis> {
    (0..factors)
        .flat_map(|j| {
            let idx = first_index + j + 1;
            [
                Axis::interval(
                    &format!("x{idx}"),
                    -COMPLEX_DISK_RADIUS,
                    COMPLEX_DISK_RADIUS,
                    XY_COUNT,
                ),
                Axis::interval(
                    &format!("y{idx}"),
                    -COMPLEX_DISK_RADIUS,
                    COMPLEX_DISK_RADIUS,
                    XY_COUNT,
                ),
            ]
        })
        .collect()
}

fn with_disks(mut m: ChartedManifold, pairs: &[(usize, usize)]) -> Result<ChartedManifold> {
    for &(i, j) in pairs {
        m = m.with_disk([i, j], COMPLEX_DISK_RADIUS)?;
    }
    Ok(m)
}

/// Rotation of the listed pairs with fundamental fields `(−y, x)` and
/// moment map `(|z_j|² − 1)_j` on an ambient of dimension `dim`.
fn rotation_action(dim: usize, pairs: Vec<(usize, usize)>) -> Result<TorusActionSpec> {
    let n = pairs.len();
    let p = pairs.clone();
    let act = Arc::new(move |theta: &[f64], x: &[f64]| {
        let mut y = x.to_vec();
        for (&(i, j), &t) in p.iter().zip(theta) {
            rotate_pair(&mut y, i, j, t);
        }
        y
    });
    let fields = pairs
        .iter()
        .map(|&(i, j)| {
            let f: VectorField = Arc::new(move |x: &[f64]| {
                let mut v = DVector::zeros(dim);
                v[i] = -x[j];
                v[j] = x[i];
                v
            });
            f
        })
        .collect();
    let p = pairs.clone();
    let moment = Arc::new(move |x: &[f64]| {
        DVector::from_iterator(
            p.len(),
            p.iter().map(|&(i, j)| x[i] * x[i] + x[j] * x[j] - 1.0),
        )
    });
    Ok(TorusActionSpec::new(n, act, fields)?
        .with_moment_map(DMatrix::identity(n, n), moment)?
        .declare_proper(true))
}

/// `ℝ³` with `ω = dx∧dy`, `η = dz` and the zero foliation.
pub fn r3_standard() -> Result<Scenario> {
    let mut omega = DMatrix::zeros(3, 3);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    Ok(Scenario::new(
        "r3_standard",
        cube(&["x", "y", "z"], 5)?,
        FormPair::constant(omega, unit(3, 2)),
    )
    .with_foliation(FoliationSpec::zero("zero")))
}

/// `ℝ⁴` with `ω = dx∧dy`, `η = dz`; `ker ♭ = span(∂w)`.
pub fn r4_precosymplectic() -> Result<Scenario> {
    let mut omega = DMatrix::zeros(4, 4);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    Ok(Scenario::new(
        "r4_precosymplectic",
        cube(&["x", "y", "z", "w"], 5)?,
        FormPair::constant(omega, unit(4, 2)),
    )
    .with_foliation(FoliationSpec::coordinate("ker_flat", 4, &[3])))
}

/// `ℝ⁴` with `ω = dx∧dy + (w − ¼) dz∧dw`, `η = dz`: the kernel of `♭` is
/// `span(∂w)` only on the hyperplane `w = ¼`, so the `∂w` foliation matches it
/// at one point of each leaf and nowhere else.
pub fn kernel_defect_fixture() -> Result<Scenario> {
    let forms = FormPair::new(
        |x: &[f64]| {
            let mut m = DMatrix::zeros(4, 4);
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -1.0;
            m[(2, 3)] = x[3] - 0.25;
            m[(3, 2)] = 0.25 - x[3];
            m
        },
        |_x: &[f64]| unit(4, 2),
    );
    Ok(
        Scenario::new("kernel_defect", cube(&["x", "y", "z", "w"], 5)?, forms)
            .with_foliation(FoliationSpec::coordinate("d_w", 4, &[3])),
    )
}

fn cn_indices(n: usize, k: usize) -> (Vec<usize>, Vec<(usize, usize)>, usize) {
    let alphas: Vec<usize> = (0..k).collect();
    let pairs: Vec<(usize, usize)> = (0..n - k).map(|j| (k + 2 * j, k + 2 * j + 1)).collect();
    (alphas, pairs, 2 * n - k)
}

/// `𝕋^k × ℂ^{n−k} × S¹` with `ω = Σ_{j>k} ω_j`, `η = dθ`, the rotation action
/// of `𝕋ⁿ` and moment map `Σ_{j>k} (|z_j|² − 1) ξ_j`.
pub fn cn_example(n: usize, k: usize) -> Result<Scenario> {
    if n == 0 || n > 3 || k >= n {
        return Err(Error::OutOfRange(format!(
            "cn(n, k) needs 1 ≤ n ≤ 3 and 0 ≤ k < n, got ({n}, {k})"
        )));
    }
    let (alphas, pairs, theta) = cn_indices(n, k);
    let dim = theta + 1;
    let mut axes: Vec<Axis> = (0..k)
        .map(|j| Axis::circle(&format!("alpha{}", j + 1), TAU, ANGLE_COUNT))
        .collect();
    axes.extend(complex_axes(k, n - k));
    axes.push(Axis::circle("theta", TAU, ANGLE_COUNT));
    let manifold = with_disks(ChartedManifold::new(axes)?, &pairs)?;

    let omega = complex_factor_omega(dim, &pairs);
    let forms = FormPair::constant(omega, unit(dim, theta));

    let (al, pr) = (alphas.clone(), pairs.clone());
    let act = Arc::new(move |t: &[f64], x: &[f64]| {
        let mut y = x.to_vec();
        for &a in &al {
            y[a] = wrap_angle(y[a] + t[a]);
        }
        for (j, &(i1, i2)) in pr.iter().enumerate() {
            rotate_pair(&mut y, i1, i2, t[k + j]);
        }
        y
    });
    let mut fields: Vec<VectorField> = alphas
        .iter()
        .map(|&a| {
            let f: VectorField = Arc::new(move |_x: &[f64]| unit(dim, a));
            f
        })
        .collect();
    fields.extend(pairs.iter().map(|&(i, j)| {
        let f: VectorField = Arc::new(move |x: &[f64]| {
            let mut v = DVector::zeros(dim);
            v[i] = -x[j];
            v[j] = x[i];
            v
        });
        f
    }));
    let pr = pairs.clone();
    let moment = Arc::new(move |x: &[f64]| {
        DVector::from_iterator(
            pr.len(),
            pr.iter().map(|&(i, j)| x[i] * x[i] + x[j] * x[j] - 1.0),
        )
    });
    let basis = DMatrix::from_fn(n - k, n, |r, c| if c == k + r { 1.0 } else { 0.0 });
    let subtorus = (0..k)
        .map(|r| (0..n).map(|c| i64::from(c == r)).collect())
        .collect();
    let action = TorusActionSpec::new(n, act, fields)?
        .with_subtorus(subtorus)?
        .with_moment_map(basis, moment)?
        .declare_proper(true);

    let name = format!("cn({n},{k})");
    let mut s = Scenario::new(&name, manifold, forms)
        .with_action(action)
        .with_foliation(FoliationSpec::coordinate("ker_flat", dim, &alphas));
    let mut displayed = alphas.clone();
    displayed.push(theta);
    s.foliation_variant = Some(FoliationSpec::coordinate(
        "ker_flat_plus_theta",
        dim,
        &displayed,
    ));
    s.arrows = Some(cn_arrows(n, k)?);
    s.slice = Some(cn_slice(&pairs, dim)?);
    s.clip_box = Some(vec![[-1.5, 3.5]; n - k]);
    s.notes.push(format!(
        "complex factors truncated to disks of radius {COMPLEX_DISK_RADIUS}"
    ));
    Ok(s)
}

/// `𝕋^k × 𝕋^k × ℂ^{n−k} × S¹ ⇉ 𝕋^k × ℂ^{n−k} × S¹`, source forgetting the
/// first torus factor and target the second.
fn cn_arrows(n: usize, k: usize) -> Result<SubmersionGroupoid> {
    let mut axes: Vec<Axis> = (0..k)
        .map(|j| Axis::circle(&format!("alpha{}", j + 1), TAU, ANGLE_COUNT))
        .collect();
    axes.extend((0..k).map(|j| Axis::circle(&format!("beta{}", j + 1), TAU, ANGLE_COUNT)));
    axes.extend(complex_axes(k, n - k));
    axes.push(Axis::circle("theta", TAU, ANGLE_COUNT));
    let pairs: Vec<(usize, usize)> = (0..n - k)
        .map(|j| (2 * k + 2 * j, 2 * k + 2 * j + 1))
        .collect();
    let arrows = with_disks(ChartedManifold::new(axes)?, &pairs)?;
    let source: PointMap = Arc::new(move |p: &[f64]| p[k..].to_vec());
    let target: PointMap =
        Arc::new(move |p: &[f64]| p[..k].iter().chain(&p[2 * k..]).copied().collect());
    Ok(SubmersionGroupoid {
        arrows,
        source,
        target,
        arrow_forms: None,
    })
}

/// `θ ↦ (α = 0, z_j = 1, θ)`, one point per torus orbit of the zero level.
fn cn_slice(pairs: &[(usize, usize)], dim: usize) -> Result<SliceParam> {
    let chart = ChartedManifold::new(vec![Axis::circle("theta", TAU, SLICE_COUNT)])?;
    let firsts: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let map: PointMap = Arc::new(move |u: &[f64]| {
        let mut x = vec![0.0; dim];
        for &i in &firsts {
            x[i] = 1.0;
        }
        x[dim - 1] = u[0];
        x
    });
    Ok(SliceParam { chart, map })
}

/// `S² × S¹` on the cylindrical chart `(φ, z, θ)` with `ω = dφ∧dz`, `η = dθ`,
/// the azimuthal circle action and `μ = z`. The poles are not in the chart.
pub fn sphere_mapping_torus(counts: [usize; 3]) -> Result<Scenario> {
    let manifold = ChartedManifold::new(vec![
        Axis::circle("phi", TAU, counts[0]),
        Axis::interval("z", -1.0, 1.0, counts[1]),
        Axis::circle("theta", TAU, counts[2]),
    ])?;
    let mut omega = DMatrix::zeros(3, 3);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    let forms = FormPair::constant(omega, unit(3, 2));
    let act = Arc::new(|t: &[f64], x: &[f64]| vec![wrap_angle(x[0] + t[0]), x[1], x[2]]);
    let field: VectorField = Arc::new(|_x: &[f64]| unit(3, 0));
    let action = TorusActionSpec::new(1, act, vec![field])?
        .with_moment_map(
            DMatrix::identity(1, 1),
            Arc::new(|x: &[f64]| DVector::from_element(1, x[1])),
        )?
        .declare_proper(true);
    let mut s = Scenario::new("sphere_s1", manifold, forms)
        .with_action(action)
        .with_foliation(FoliationSpec::zero("zero"));
    s.clip_box = Some(vec![[-1.5, 1.5]]);
    s.notes
        .push("poles excluded by the cylindrical chart".into());
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    North,
    South,
}

impl Pole {
    fn sign(self) -> f64 {
        match self {
            Pole::North => 1.0,
            Pole::South => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pole::North => "north",
            Pole::South => "south",
        }
    }
}

const POLE_HALF_WIDTH: f64 = 0.6;
const POLE_COUNT: usize = 11;

/// `S² × S¹` near a pole in the coordinates `(u, v) = (x, y)` of the sphere,
/// with `ω = ±(1/w) du∧dv`, `w = √(1 − u² − v²)` and height `μ = ±w`.
pub fn sphere_pole_chart(pole: Pole) -> Result<Scenario> {
    let s = pole.sign();
    let manifold = ChartedManifold::new(vec![
        Axis::interval("u", -POLE_HALF_WIDTH, POLE_HALF_WIDTH, POLE_COUNT),
        Axis::interval("v", -POLE_HALF_WIDTH, POLE_HALF_WIDTH, POLE_COUNT),
        Axis::circle("theta", TAU, ANGLE_COUNT),
    ])?;
    let height = |x: &[f64]| (1.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
    let forms = FormPair::new(
        move |x: &[f64]| {
            let a = s / height(x);
            DMatrix::from_row_slice(3, 3, &[0.0, a, 0.0, -a, 0.0, 0.0, 0.0, 0.0, 0.0])
        },
        |_x: &[f64]| unit(3, 2),
    );
    let act = Arc::new(|t: &[f64], x: &[f64]| {
        let mut y = x.to_vec();
        rotate_pair(&mut y, 0, 1, t[0]);
        y
    });
    let field: VectorField = Arc::new(|x: &[f64]| DVector::from_column_slice(&[-x[1], x[0], 0.0]));
    let action = TorusActionSpec::new(1, act, vec![field])?
        .with_moment_map(
            DMatrix::identity(1, 1),
            Arc::new(move |x: &[f64]| DVector::from_element(1, s * height(x))),
        )?
        .declare_proper(true);
    let mut sc = Scenario::new(
        &format!("sphere_s1_pole({})", pole.label()),
        manifold,
        forms,
    )
    .with_action(action)
    .with_foliation(FoliationSpec::zero("zero"));
    sc.clip_box = Some(vec![[-1.5, 1.5]]);
    Ok(sc)
}

fn complex_base(factors: usize, count: usize) -> Result<(ChartedManifold, Vec<(usize, usize)>)> {
    let pairs: Vec<(usize, usize)> = (0..factors).map(|j| (2 * j, 2 * j + 1)).collect();
    let axes = complex_axes(0, factors)
        .into_iter()
        .map(|a| Axis { count, ..a })
        .collect();
    Ok((with_disks(ChartedManifold::new(axes)?, &pairs)?, pairs))
}

/// Mapping torus of `(ℂ^factors, Σ ω_j)` with monodromy `phi` and the lifted rotation action.
pub(crate) fn complex_mapping_torus(
    name: &str,
    factors: usize,
    count: usize,
    phi: PointMap,
) -> Result<Scenario> {
    let (base, pairs) = complex_base(factors, count)?;
    let d = base.dim();
    let omega = complex_factor_omega(d, &pairs);
    let action = rotation_action(d, pairs.clone())?;
    let spec = MappingTorusSpec::new(name, base, Arc::new(move |_x: &[f64]| omega.clone()), phi)?
        .with_action(action);
    let mut s = mapping_torus(&spec)?;
    s.foliation = Some(FoliationSpec::zero("zero"));
    s.clip_box = Some(vec![[-1.5, 3.5]; factors]);
    s.notes.push(format!(
        "complex factors truncated to disks of radius {COMPLEX_DISK_RADIUS}"
    ));
    Ok(s)
}

/// `φ(z₁, z₂) = (z₁, −z₂)` on `ℂ²`, restricted to `|z₁| = 1`: `Y₀ ≅ S¹ × ℂ`
/// swept around the circle with the half turn as monodromy.
pub(crate) fn y0_halfturn() -> Result<Scenario> {
    let phi: PointMap = Arc::new(|x: &[f64]| vec![x[0], x[1], -x[2], -x[3]]);
    let ambient = complex_mapping_torus("y0_ambient", 2, 7, phi)?;
    let chart = ChartedManifold::new(vec![
        Axis::circle("alpha", TAU, 6),
        Axis::interval("x2", -COMPLEX_DISK_RADIUS, COMPLEX_DISK_RADIUS, 7),
        Axis::interval("y2", -COMPLEX_DISK_RADIUS, COMPLEX_DISK_RADIUS, 7),
        Axis::circle("theta", 1.0, ANGLE_COUNT),
    ])?
    .with_disk([1, 2], COMPLEX_DISK_RADIUS)?;
    let map: PointMap = Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin(), u[1], u[2], u[3]]);
    let inverse: PointMap =
        Arc::new(|x: &[f64]| vec![wrap_angle(x[1].atan2(x[0])), x[2], x[3], x[4]]);
    let param = Parametrization {
        chart,
        map,
        inverse: Some(inverse),
    };
    let mut s = level_set_structure(&ambient, &[vec![1, 0]], &param)?;
    s.name = "y0_halfturn".into();
    s.foliation = Some(FoliationSpec::coordinate("ker_flat", 4, &[0]));
    s.holonomy = Some(HolonomyProbe {
        label: "return map of the leaf through z2 = 0 on the z2 transversal".into(),
        return_map: Arc::new(|z: &[f64]| vec![-z[0], -z[1]]),
        test_point: vec![0.1, 0.05],
    });
    s.clip_box = Some(vec![[-1.5, 3.5]]);
    s.diagnostics.extend(
        ambient
            .diagnostics
            .iter()
            .map(|(k, v)| (format!("ambient_{k}"), *v)),
    );
    Ok(s)
}
