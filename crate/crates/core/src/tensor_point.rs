//! Pointwise exterior and linear algebra.
//!
//! Everything here acts on the value of `(ω, η)` at a single point, written in
//! the chart basis: `Ω_ij = ω(e_i, e_j)` and `η_i = η(e_i)`. The contraction
//! convention is fixed once: `(ι_v ω)_j = ω(v, e_j) = (−Ω v)_j`, so the
//! Lichnerowicz map `♭(v) = ι_v ω + η(v) η` has matrix `L = −Ω + η ηᵀ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative rank tolerance: singular values `σ ≤ tol · σ_max` count as zero.
pub const DEFAULT_TOL_RANK: f64 = 1e-9;

const ANTISYMMETRY_TOL: f64 = 1e-12;

/// The pair `(Ω, η)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTensor {
    omega: DMatrix<f64>,
    eta: DVector<f64>,
}

impl PointTensor {
    pub fn new(omega: DMatrix<f64>, eta: DVector<f64>) -> Result<Self> {
        check_pair(&omega, &eta)?;
        Ok(Self { omega, eta })
    }

    pub fn from_rows(omega: &[&[f64]], eta: &[f64]) -> Result<Self> {
        let dim = eta.len();
        if omega.len() != dim || omega.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "omega rows do not form a {dim}x{dim} matrix"
            )));
        }
        let omega = DMatrix::from_fn(dim, dim, |i, j| omega[i][j]);
        Self::new(omega, DVector::from_column_slice(eta))
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn eta(&self) -> &DVector<f64> {
        &self.eta
    }

    /// Matrix of the Lichnerowicz map at this point.
    pub fn flat(&self) -> DMatrix<f64> {
        flat_unchecked(&self.omega, &self.eta)
    }
}

fn check_pair(omega: &DMatrix<f64>, eta: &DVector<f64>) -> Result<()> {
    let dim = eta.len();
    if omega.nrows() != dim || omega.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "omega is {}x{}, eta has length {dim}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    if omega.iter().chain(eta.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite tensor entry".into()));
    }
    let scale = omega.amax().max(1.0);
    let skew = (omega + omega.transpose()).amax();
    if skew > ANTISYMMETRY_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "omega is not antisymmetric (|Ω + Ωᵀ| = {skew:e})"
        )));
    }
    Ok(())
}

fn flat_unchecked(omega: &DMatrix<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
    -omega + eta * eta.transpose()
}

/// `L = −Ω + η ηᵀ`, the matrix of `♭` acting on column vectors.
pub fn lichnerowicz_matrix(omega: &DMatrix<f64>, eta: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_pair(omega, eta)?;
    Ok(flat_unchecked(omega, eta))
}

/// An orthonormal basis of a linear subspace of `ℝ^dim`, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn empty(dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(dim, 0),
        }
    }

    pub fn full(dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(dim, dim),
        }
    }

    /// Orthonormal basis of the span of `vectors`; directions with singular
    /// value below `tol_rank · σ_max` are dropped.
    pub fn span(dim: usize, vectors: &[DVector<f64>], tol_rank: f64) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} in ambient dimension {dim}",
                v.len()
            )));
        }
        if vectors.is_empty() {
            return Ok(Self::empty(dim));
        }
        let a = DMatrix::from_columns(vectors);
        Ok(range_basis(&a, tol_rank))
    }

    /// Wraps columns that are already orthonormal (checked to 1e-10).
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let k = basis.ncols();
        let err = (gram - DMatrix::identity(k, k)).amax();
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn standard(dim: usize, axes: &[usize]) -> Self {
        let mut basis = DMatrix::zeros(dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            basis[(a, c)] = 1.0;
        }
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        self.basis.column_iter().map(|c| c.into_owned())
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// `‖v − P v‖`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.residual(v) <= tol
    }

    fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn orthogonal_complement(&self) -> Self {
        kernel_basis(&self.projector(), 1e-8)
    }

    pub fn intersection(&self, other: &Self, tol_rank: f64) -> Result<Self> {
        same_ambient(self, other)?;
        let n = self.ambient_dim();
        let id = DMatrix::<f64>::identity(n, n);
        let a = id.clone() - self.projector();
        let b = id - other.projector();
        let mut stacked = DMatrix::zeros(2 * n, n);
        stacked.rows_mut(0, n).copy_from(&a);
        stacked.rows_mut(n, n).copy_from(&b);
        Ok(kernel_basis(&stacked, tol_rank))
    }

    pub fn sum(&self, other: &Self, tol_rank: f64) -> Result<Self> {
        same_ambient(self, other)?;
        let vectors: Vec<_> = self.vectors().chain(other.vectors()).collect();
        Self::span(self.ambient_dim(), &vectors, tol_rank)
    }
}

fn same_ambient(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<()> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::ShapeMismatch(format!(
            "subspaces of ℝ^{} and ℝ^{}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    Ok(())
}

/// Singular values together with a full set of right singular vectors (rows
/// of the returned `n × n` matrix).
fn svd_right(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let square = if m < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.rows_mut(0, m).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    (svd.singular_values.iter().copied().collect(), v_t)
}

/// Orthonormal basis of the right null space of `a`. Singular values
/// `σ ≤ tol_rank · σ_max` are treated as zero; the zero matrix has the whole
/// space as kernel.
pub fn kernel_basis(a: &DMatrix<f64>, tol_rank: f64) -> SubspaceBasis {
    let n = a.ncols();
    if n == 0 {
        return SubspaceBasis::empty(0);
    }
    if a.nrows() == 0 || a.amax() == 0.0 {
        return SubspaceBasis::full(n);
    }
    let (sigma, v_t) = svd_right(a);
    let cutoff = tol_rank * sigma.iter().copied().fold(0.0, f64::max);
    let null_rows: Vec<_> = (0..n)
        .filter(|&i| sigma.get(i).is_none_or(|&s| s <= cutoff))
        .map(|i| v_t.row(i).transpose())
        .collect();
    if null_rows.is_empty() {
        return SubspaceBasis::empty(n);
    }
    SubspaceBasis {
        basis: DMatrix::from_columns(&null_rows),
    }
}

/// Orthonormal basis of the column space of `a` (same tolerance rule).
pub fn range_basis(a: &DMatrix<f64>, tol_rank: f64) -> SubspaceBasis {
    let m = a.nrows();
    if a.ncols() == 0 || a.amax() == 0.0 {
        return SubspaceBasis::empty(m);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cutoff = tol_rank * svd.singular_values.max();
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cutoff)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return SubspaceBasis::empty(m);
    }
    SubspaceBasis {
        basis: DMatrix::from_columns(&cols),
    }
}

/// Numerical rank under the relative tolerance rule of [`kernel_basis`].
pub fn numerical_rank(a: &DMatrix<f64>, tol_rank: f64) -> usize {
    a.ncols() - kernel_basis(a, tol_rank).rank()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceRelation {
    Equal,
    UContainedInVStrict,
    VContainedInUStrict,
    Incomparable,
}

/// Containment of `u` in `v` is judged by projection residuals:
/// every basis vector of `u` must satisfy `‖x − P_V x‖ ≤ tol`.
pub fn subspace_relation(
    u: &SubspaceBasis,
    v: &SubspaceBasis,
    tol: f64,
) -> Result<SubspaceRelation> {
    same_ambient(u, v)?;
    let u_in_v = u.vectors().all(|x| v.contains(&x, tol));
    let v_in_u = v.vectors().all(|x| u.contains(&x, tol));
    Ok(match (u_in_v, v_in_u) {
        (true, true) => SubspaceRelation::Equal,
        (true, false) if u.rank() < v.rank() => SubspaceRelation::UContainedInVStrict,
        (false, true) if v.rank() < u.rank() => SubspaceRelation::VContainedInUStrict,
        _ => SubspaceRelation::Incomparable,
    })
}

/// The standard frame `e_1, …, e_dim`.
pub fn standard_frame(dim: usize) -> Vec<DVector<f64>> {
    (0..dim)
        .map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect()
}

const MAX_WEDGE_DEGREE: usize = 9;

/// Value of `(η ∧ ω^r)(f_1, …, f_{2r+1})` by full antisymmetrization.
///
/// Normalization: `(α∧β)(v_1..v_{p+q}) = 1/(p! q!) Σ_σ sgn(σ) α(v_σ…) β(v_σ…)`,
/// so `(dx∧dy)(∂x, ∂y) = 1` and `(dz∧dx∧dy)(∂z, ∂x, ∂y) = 1`.
pub fn wedge_top_value(pt: &PointTensor, r: usize, frame: &[DVector<f64>]) -> Result<f64> {
    let needed = 2 * r + 1;
    let dim = pt.dim();
    if needed > dim || frame.len() < needed {
        return Err(Error::FrameTooSmall {
            needed,
            got: frame.len(),
            dim,
        });
    }
    if needed > MAX_WEDGE_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "wedge degree {needed} exceeds the permutation-sum limit {MAX_WEDGE_DEGREE}"
        )));
    }
    if let Some(f) = frame[..needed].iter().find(|f| f.len() != dim) {
        return Err(Error::ShapeMismatch(format!(
            "frame vector of length {} in dimension {dim}",
            f.len()
        )));
    }
    let frame = &frame[..needed];
    let eta_vals: Vec<f64> = frame.iter().map(|f| pt.eta().dot(f)).collect();
    let omega_vals = DMatrix::from_fn(needed, needed, |i, j| {
        (frame[i].transpose() * pt.omega() * &frame[j])[(0, 0)]
    });

    let mut total = 0.0;
    for_each_permutation(needed, |perm, sign| {
        let mut term = sign * eta_vals[perm[0]];
        for pair in perm[1..].chunks_exact(2) {
            term *= omega_vals[(pair[0], pair[1])];
        }
        total += term;
    });
    Ok(total / 2f64.powi(r as i32))
}

/// Families of random point tensors used by the property suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    /// Standard `(Σ dx_i∧dy_i, dz)` in a random well-conditioned basis; odd dimensions only.
    CosymplecticRigged,
    /// `rank Ω ≤ dim − 2`, so `ker ω ∩ ker η ≠ 0` whatever `η` is.
    Degenerate,
    /// Uniform entries.
    Generic,
}

fn uniform_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn uniform_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
}

/// One random tensor of the requested family; `CosymplecticRigged` in even
/// dimensions falls back to `Degenerate`.
pub fn random_point_tensor<R: Rng + ?Sized>(
    dim: usize,
    kind: TensorKind,
    rng: &mut R,
) -> PointTensor {
    let (omega, eta) = match kind {
        TensorKind::CosymplecticRigged if dim % 2 == 1 => {
            let mut om = DMatrix::zeros(dim, dim);
            for i in 0..dim / 2 {
                om[(2 * i, 2 * i + 1)] = 1.0;
                om[(2 * i + 1, 2 * i)] = -1.0;
            }
            let mut eta = DVector::zeros(dim);
            eta[dim - 1] = 1.0;
            // ‖0.2 R‖ ≤ 1.4 for dim ≤ 7, so σ_min(2I + 0.2R) ≥ 0.6.
            let p = DMatrix::identity(dim, dim) * 2.0 + uniform_matrix(dim, dim, rng) * 0.2;
            (p.transpose() * om * &p, p.transpose() * eta)
        }
        TensorKind::CosymplecticRigged | TensorKind::Degenerate => {
            let m = dim.saturating_sub(2);
            let b = uniform_matrix(dim, m, rng);
            let k = uniform_matrix(m, m, rng);
            let om = &b * (&k - k.transpose()) * b.transpose();
            let eta = if rng.random_bool(0.2) {
                DVector::zeros(dim)
            } else {
                uniform_vector(dim, rng)
            };
            (om, eta)
        }
        TensorKind::Generic => {
            let a = uniform_matrix(dim, dim, rng);
            (&a - a.transpose(), uniform_vector(dim, rng))
        }
    };
    PointTensor::new(omega, eta).expect("antisymmetric by construction")
}

/// Heap's algorithm, tracking the permutation sign.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize], f64)) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let mut sign = 1.0;
    visit(&perm, sign);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            sign = -sign;
            visit(&perm, sign);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_r3() -> PointTensor {
        PointTensor::from_rows(
            &[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]],
            &[0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn flat_matrix_examples() {
        let one = PointTensor::from_rows(&[&[0.0]], &[1.0]).unwrap();
        assert_eq!(one.flat(), DMatrix::from_row_slice(1, 1, &[1.0]));

        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(standard_r3().flat(), expected);
        // ♭(e_1) = ι_{∂x}(dx∧dy) = dy
        let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        assert_eq!(
            standard_r3().flat() * e1,
            DVector::from_column_slice(&[0.0, 1.0, 0.0])
        );

        let sympl = PointTensor::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(
            sympl.flat(),
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
        );
    }

    #[test]
    fn shape_and_symmetry_errors() {
        let omega = DMatrix::zeros(3, 3);
        let eta = DVector::zeros(2);
        assert!(matches!(
            lichnerowicz_matrix(&omega, &eta),
            Err(Error::ShapeMismatch(_))
        ));
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(PointTensor::new(sym, DVector::zeros(2)).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&DMatrix::identity(3, 3), 1e-9).is_zero());
        assert_eq!(kernel_basis(&DMatrix::zeros(2, 2), 1e-9).rank(), 2);
        assert!(kernel_basis(&standard_r3().flat(), 1e-9).is_zero());
        let wide = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 2.0]);
        let k = kernel_basis(&wide, 1e-9);
        assert_eq!(k.rank(), 2);
        assert_eq!(
            subspace_relation(&k, &SubspaceBasis::standard(3, &[0, 1]), 1e-10).unwrap(),
            SubspaceRelation::Equal
        );
    }

    #[test]
    fn relation_examples() {
        let e1 = SubspaceBasis::standard(3, &[0]);
        let e12 = SubspaceBasis::standard(3, &[0, 1]);
        let e2 = SubspaceBasis::standard(3, &[1]);
        let e3 = SubspaceBasis::standard(3, &[2]);
        assert_eq!(
            subspace_relation(&e1, &e12, 1e-10).unwrap(),
            SubspaceRelation::UContainedInVStrict
        );
        assert_eq!(
            subspace_relation(&e12, &e1, 1e-10).unwrap(),
            SubspaceRelation::VContainedInUStrict
        );
        assert_eq!(
            subspace_relation(&e3, &e3, 1e-10).unwrap(),
            SubspaceRelation::Equal
        );
        assert_eq!(
            subspace_relation(&e1, &e2, 1e-10).unwrap(),
            SubspaceRelation::Incomparable
        );
        assert!(subspace_relation(&e1, &SubspaceBasis::empty(2), 1e-10).is_err());
    }

    #[test]
    fn intersection_and_sum() {
        let a = SubspaceBasis::standard(3, &[0, 1]);
        let b = SubspaceBasis::span(
            3,
            &[
                DVector::from_column_slice(&[0.0, 1.0, 1.0]),
                DVector::from_column_slice(&[1.0, 0.0, 0.0]),
            ],
            1e-9,
        )
        .unwrap();
        let cap = a.intersection(&b, 1e-9).unwrap();
        assert_eq!(cap.rank(), 1);
        assert!(cap.contains(&DVector::from_column_slice(&[1.0, 0.0, 0.0]), 1e-12));
        assert_eq!(a.sum(&b, 1e-9).unwrap().rank(), 3);
        assert_eq!(a.orthogonal_complement().rank(), 1);
    }

    #[test]
    fn wedge_examples() {
        let pt = standard_r3();
        let f = standard_frame(3);
        let frame = vec![f[2].clone(), f[0].clone(), f[1].clone()];
        assert!((wedge_top_value(&pt, 1, &frame).unwrap() - 1.0).abs() < 1e-15);
        // dz∧dx∧dy on (∂x, ∂y, ∂z) is also +1 (cyclic permutation).
        assert!((wedge_top_value(&pt, 1, &f).unwrap() - 1.0).abs() < 1e-15);

        let no_eta = PointTensor::new(pt.omega().clone(), DVector::zeros(3)).unwrap();
        assert_eq!(wedge_top_value(&no_eta, 0, &f).unwrap(), 0.0);

        let no_omega = PointTensor::new(DMatrix::zeros(3, 3), pt.eta().clone()).unwrap();
        assert_eq!(wedge_top_value(&no_omega, 1, &f).unwrap(), 0.0);

        assert!(matches!(
            wedge_top_value(&pt, 2, &f),
            Err(Error::FrameTooSmall { needed: 5, .. })
        ));
        assert!(matches!(
            wedge_top_value(&pt, 1, &f[..2]),
            Err(Error::FrameTooSmall { .. })
        ));
    }

    #[test]
    fn permutation_signs_sum_to_zero() {
        for n in 2..6 {
            let mut count = 0usize;
            let mut signed = 0.0;
            for_each_permutation(n, |_, s| {
                count += 1;
                signed += s;
            });
            assert_eq!(count, (1..=n).product::<usize>());
            assert_eq!(signed, 0.0);
        }
    }
}
