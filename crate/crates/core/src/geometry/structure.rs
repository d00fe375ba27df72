use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::chart::ChartedManifold;
use crate::error::{Error, FormKind, Result};
use crate::numeric::{self, MatrixField, VectorField};
use crate::tensor_point::{
    kernel_basis, numerical_rank, subspace_relation, PointTensor, SubspaceRelation,
};

/// Default closedness threshold for finite-difference exterior derivatives.
pub const DEFAULT_TOL_CLOSED: f64 = 1e-4;
const ETA_VANISHING: f64 = 1e-10;
const LEMMA_TOL: f64 = 1e-8;

/// The structure forms as fields over chart coordinates.
#[derive(Clone)]
pub struct FormPair {
    omega_at: MatrixField,
    eta_at: VectorField,
    pub declared_closed: bool,
}

impl fmt::Debug for FormPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormPair")
            .field("declared_closed", &self.declared_closed)
            .finish_non_exhaustive()
    }
}

impl FormPair {
    pub fn new(
        omega_at: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        eta_at: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            omega_at: Arc::new(omega_at),
            eta_at: Arc::new(eta_at),
            declared_closed: true,
        }
    }

    pub fn from_fields(omega_at: MatrixField, eta_at: VectorField) -> Self {
        Self {
            omega_at,
            eta_at,
            declared_closed: true,
        }
    }

    pub fn constant(omega: DMatrix<f64>, eta: DVector<f64>) -> Self {
        Self::new(move |_| omega.clone(), move |_| eta.clone())
    }

    pub fn omega(&self, x: &[f64]) -> DMatrix<f64> {
        (self.omega_at)(x)
    }

    pub fn eta(&self, x: &[f64]) -> DVector<f64> {
        (self.eta_at)(x)
    }

    pub fn omega_field(&self) -> &MatrixField {
        &self.omega_at
    }

    pub fn eta_field(&self) -> &VectorField {
        &self.eta_at
    }

    pub fn point(&self, x: &[f64]) -> Result<PointTensor> {
        PointTensor::new(self.omega(x), self.eta(x))
    }

    /// `L(x) = −Ω(x) + η(x) η(x)ᵀ`.
    pub fn flat(&self, x: &[f64]) -> DMatrix<f64> {
        let eta = self.eta(x);
        -self.omega(x) + &eta * eta.transpose()
    }

    /// Pullback through a map with Jacobian `jac` evaluated at the image point.
    pub fn pulled_back(
        &self,
        map: numeric::PointMap,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + Clone + 'static,
    ) -> Self {
        let (om, et) = (self.omega_at.clone(), self.eta_at.clone());
        let (map2, jac2) = (map.clone(), jacobian.clone());
        Self::new(
            move |u| {
                let j = jacobian(u);
                j.transpose() * om(&map(u)) * j
            },
            move |u| jac2(u).transpose() * et(&map2(u)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosednessResiduals {
    pub omega: f64,
    pub eta: f64,
}

impl ClosednessResiduals {
    pub fn passes(&self, tol_closed: f64) -> bool {
        self.omega <= tol_closed && self.eta <= tol_closed
    }
}

fn closedness_at(forms: &FormPair, x: &[f64], h: f64) -> (f64, f64) {
    let n = x.len();
    let d_eta = numeric::vector_partials(&|y| forms.eta(y), x, h);
    let mut eta_res: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            eta_res = eta_res.max((d_eta[i][j] - d_eta[j][i]).abs());
        }
    }
    let d_omega = numeric::matrix_partials(&|y| forms.omega(y), x, h);
    let mut omega_res: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let r = d_omega[i][(j, k)] + d_omega[j][(k, i)] + d_omega[k][(i, j)];
                omega_res = omega_res.max(r.abs());
            }
        }
    }
    (omega_res, eta_res)
}

/// Largest central-difference component of `dω` and `dη` over the grid.
pub fn verify_closed(
    manifold: &ChartedManifold,
    forms: &FormPair,
    h: f64,
) -> Result<ClosednessResiduals> {
    manifold.check_step(h)?;
    let per_point: Vec<(f64, f64)> = manifold
        .grid()
        .points()
        .par_iter()
        .map(|p| closedness_at(forms, &p.coords, h))
        .collect();
    Ok(ClosednessResiduals {
        omega: numeric::max_or_inf(per_point.iter().map(|r| r.0)),
        eta: numeric::max_or_inf(per_point.iter().map(|r| r.1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Cosymplectic { n: usize },
    Precosymplectic { r: usize },
    Degenerate { reason: String },
}

impl Verdict {
    pub fn is_structure(&self) -> bool {
        !matches!(self, Verdict::Degenerate { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Cosymplectic { n } => write!(f, "Cosymplectic({n})"),
            Verdict::Precosymplectic { r } => write!(f, "Precosymplectic({r})"),
            Verdict::Degenerate { reason } => write!(f, "Degenerate({reason})"),
        }
    }
}

pub const REASON_NOT_STRICT: &str = "ker(flat)=ker(omega)";
pub const REASON_RANK_VARIES: &str = "rank of flat varies over the grid";
pub const REASON_OMEGA_RANK_VARIES: &str = "rank of omega varies over the grid";
pub const REASON_LEMMA: &str = "ker(flat) differs from ker(omega)∩ker(eta)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureClassification {
    pub verdict: Verdict,
    pub rank_of_flat: usize,
    pub rank_of_omega: usize,
    pub residuals: ClosednessResiduals,
    pub points_checked: usize,
}

#[derive(Debug, Clone, Copy)]
struct PointSummary {
    rank_flat: usize,
    rank_omega: usize,
    lemma_holds: bool,
    strict: bool,
}

fn summarize_point(forms: &FormPair, x: &[f64], tol_rank: f64) -> Result<PointSummary> {
    let pt = forms.point(x)?;
    if pt.eta().norm() <= ETA_VANISHING {
        return Err(Error::EtaVanishes(x.to_vec()));
    }
    let dim = pt.dim();
    let ker_flat = kernel_basis(&pt.flat(), tol_rank);
    let ker_omega = kernel_basis(pt.omega(), tol_rank);
    let ker_eta = kernel_basis(
        &DMatrix::from_row_slice(1, pt.dim(), pt.eta().as_slice()),
        tol_rank,
    );
    let cap = ker_omega.intersection(&ker_eta, tol_rank)?;
    Ok(PointSummary {
        rank_flat: dim - ker_flat.rank(),
        rank_omega: dim - ker_omega.rank(),
        lemma_holds: subspace_relation(&ker_flat, &cap, LEMMA_TOL)? == SubspaceRelation::Equal,
        strict: subspace_relation(&ker_flat, &ker_omega, LEMMA_TOL)?
            == SubspaceRelation::UContainedInVStrict,
    })
}

/// Classifies `(M, ω, η)` as cosymplectic, precosymplectic or degenerate.
pub fn classify_structure(
    manifold: &ChartedManifold,
    forms: &FormPair,
    tol_rank: f64,
    tol_closed: f64,
) -> Result<StructureClassification> {
    let residuals = verify_closed(manifold, forms, manifold.default_step())?;
    if residuals.omega > tol_closed {
        return Err(Error::NotClosed {
            form: FormKind::Omega,
            residual: residuals.omega,
        });
    }
    if residuals.eta > tol_closed {
        return Err(Error::NotClosed {
            form: FormKind::Eta,
            residual: residuals.eta,
        });
    }
    let grid = manifold.grid();
    let summaries = grid
        .points()
        .par_iter()
        .map(|p| summarize_point(forms, &p.coords, tol_rank))
        .collect::<Result<Vec<_>>>()?;
    let first = summaries
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("chart grid is empty".into()))?;
    let dim = manifold.dim();
    let degenerate = |reason: &str| Verdict::Degenerate {
        reason: reason.into(),
    };

    let verdict = if summaries.iter().any(|s| s.rank_flat != first.rank_flat) {
        degenerate(REASON_RANK_VARIES)
    } else if summaries.iter().any(|s| s.rank_omega != first.rank_omega) {
        degenerate(REASON_OMEGA_RANK_VARIES)
    } else if !summaries.iter().all(|s| s.lemma_holds) {
        degenerate(REASON_LEMMA)
    } else if first.rank_flat == dim && dim % 2 == 1 {
        Verdict::Cosymplectic { n: (dim - 1) / 2 }
    } else if summaries.iter().all(|s| s.strict) {
        Verdict::Precosymplectic {
            r: (first.rank_flat - 1) / 2,
        }
    } else {
        degenerate(REASON_NOT_STRICT)
    };

    Ok(StructureClassification {
        verdict,
        rank_of_flat: first.rank_flat,
        rank_of_omega: first.rank_omega,
        residuals,
        points_checked: summaries.len(),
    })
}

/// `v = L⁻¹ η`, the Reeb field at `x`.
pub fn reeb_field(forms: &FormPair, x: &[f64], tol_rank: f64) -> Result<DVector<f64>> {
    let flat = forms.flat(x);
    if numerical_rank(&flat, tol_rank) < flat.nrows() {
        return Err(Error::SingularFlat(x.to_vec()));
    }
    flat.lu()
        .solve(&forms.eta(x))
        .ok_or_else(|| Error::SingularFlat(x.to_vec()))
}

/// `(‖ι_v ω‖, |η(v) − 1|)` for a candidate Reeb vector.
pub fn reeb_residuals(forms: &FormPair, x: &[f64], v: &DVector<f64>) -> (f64, f64) {
    let contraction = -forms.omega(x) * v;
    (contraction.norm(), (forms.eta(x).dot(v) - 1.0).abs())
}

/// Default tolerance for `|df(u)|` along kernel directions.
pub const DEFAULT_BASIC_TOL: f64 = 1e-6;

/// `f` is basic at `x` when `df_x` annihilates `ker(♭_x)`.
pub fn basicness_check(
    manifold: &ChartedManifold,
    forms: &FormPair,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    tol: f64,
) -> bool {
    let df = numeric::gradient(f, x, manifold.default_step().max(1e-6));
    kernel_basis(&forms.flat(x), crate::tensor_point::DEFAULT_TOL_RANK)
        .vectors()
        .all(|u| df.dot(&u).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart::Axis;

    fn cube(dim: usize) -> ChartedManifold {
        let names = ["x", "y", "z", "w", "u", "v", "s"];
        ChartedManifold::new(
            (0..dim)
                .map(|i| Axis::interval(names[i], -1.0, 1.0, 5))
                .collect(),
        )
        .unwrap()
    }

    /// `Σ c dx_i∧dx_j` from a list of `(i, j, c)`.
    fn omega_of(dim: usize, terms: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(i, j, c) in terms {
            m[(i, j)] += c;
            m[(j, i)] -= c;
        }
        m
    }

    fn basis_covector(dim: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 })
    }

    fn standard_r3() -> FormPair {
        FormPair::constant(omega_of(3, &[(0, 1, 1.0)]), basis_covector(3, 2))
    }

    #[test]
    fn closedness_examples() {
        let m = cube(3);
        let r = verify_closed(&m, &standard_r3(), m.default_step()).unwrap();
        assert!(r.omega < 1e-12 && r.eta < 1e-12);

        let grad = FormPair::new(
            |_| DMatrix::zeros(3, 3),
            |x| {
                DVector::from_column_slice(&[
                    2.0 * x[0] * x[1],
                    x[0] * x[0] + x[2].cos(),
                    -x[1] * x[2].sin(),
                ])
            },
        );
        let r = verify_closed(&m, &grad, 1e-4).unwrap();
        assert!(r.eta < 1e-6, "{r:?}");

        // Ω_12 = x_3: dω = dz∧dx∧dy has 123-component 1.
        let bad = FormPair::new(|x| omega_of(3, &[(0, 1, x[2])]), |_| basis_covector(3, 2));
        let r = verify_closed(&m, &bad, 1e-4).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-8, "{r:?}");
        assert!(matches!(
            classify_structure(&m, &bad, 1e-9, DEFAULT_TOL_CLOSED),
            Err(Error::NotClosed {
                form: FormKind::Omega,
                ..
            })
        ));
        assert!(matches!(
            verify_closed(&m, &bad, 0.5),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn classification_examples() {
        let c = classify_structure(&cube(3), &standard_r3(), 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(c.verdict, Verdict::Cosymplectic { n: 1 });
        assert_eq!(c.rank_of_flat, 3);

        let r4 = FormPair::constant(omega_of(4, &[(0, 1, 1.0)]), basis_covector(4, 2));
        let c = classify_structure(&cube(4), &r4, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(c.verdict, Verdict::Precosymplectic { r: 1 });
        assert_eq!((c.rank_of_flat, c.rank_of_omega), (3, 2));

        let not_strict = FormPair::constant(omega_of(3, &[(0, 1, 1.0)]), basis_covector(3, 0));
        let c = classify_structure(&cube(3), &not_strict, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(
            c.verdict,
            Verdict::Degenerate {
                reason: REASON_NOT_STRICT.into()
            }
        );

        let vanishing = FormPair::constant(omega_of(3, &[(0, 1, 1.0)]), DVector::zeros(3));
        assert!(matches!(
            classify_structure(&cube(3), &vanishing, 1e-9, DEFAULT_TOL_CLOSED),
            Err(Error::EtaVanishes(_))
        ));
    }

    #[test]
    fn classification_detects_rank_jumps() {
        // ω = dx∧dy + w dz∧dw is closed and gains rank away from w = 0.
        let jump = FormPair::new(
            |x| omega_of(4, &[(0, 1, 1.0), (2, 3, x[3])]),
            |_| basis_covector(4, 2),
        );
        let c = classify_structure(&cube(4), &jump, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(
            c.verdict,
            Verdict::Degenerate {
                reason: REASON_RANK_VARIES.into()
            }
        );
    }

    #[test]
    fn even_dimensional_symplectic_is_not_precosymplectic() {
        let forms = FormPair::constant(omega_of(2, &[(0, 1, 1.0)]), basis_covector(2, 0));
        let c = classify_structure(&cube(2), &forms, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(c.rank_of_flat, 2);
        assert!(!c.verdict.is_structure());
    }

    #[test]
    fn classification_is_invariant_under_axis_permutation() {
        let r4 = FormPair::constant(omega_of(4, &[(0, 1, 1.0)]), basis_covector(4, 2));
        let perm = [3usize, 1, 0, 2];
        let permuted = FormPair::constant(
            omega_of(4, &[(perm[0], perm[1], 1.0)]),
            basis_covector(4, perm[2]),
        );
        let a = classify_structure(&cube(4), &r4, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        let b = classify_structure(&cube(4), &permuted, 1e-9, DEFAULT_TOL_CLOSED).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.rank_of_flat, b.rank_of_flat);
    }

    #[test]
    fn reeb_examples() {
        let x = [0.3, -0.2, 0.5];
        let v = reeb_field(&standard_r3(), &x, 1e-9).unwrap();
        assert!((v - DVector::from_column_slice(&[0.0, 0.0, 1.0])).norm() < 1e-12);

        let scaled = FormPair::constant(
            omega_of(3, &[(0, 1, 1.0)]),
            DVector::from_column_slice(&[0.0, 0.0, 2.0]),
        );
        let v = reeb_field(&scaled, &x, 1e-9).unwrap();
        assert!((v.clone() - DVector::from_column_slice(&[0.0, 0.0, 0.5])).norm() < 1e-12);
        let (om, et) = reeb_residuals(&scaled, &x, &v);
        assert!(om <= 1e-9 && et <= 1e-9);
        // The old η = dz does not evaluate to 1 on the new Reeb field.
        assert!((standard_r3().eta(&x).dot(&v) - 1.0).abs() > 0.4);
        // ♭(Reeb) reproduces η.
        assert!((scaled.flat(&x) * &v - scaled.eta(&x)).norm() < 1e-12);

        let r4 = FormPair::constant(omega_of(4, &[(0, 1, 1.0)]), basis_covector(4, 2));
        assert!(matches!(
            reeb_field(&r4, &[0.0; 4], 1e-9),
            Err(Error::SingularFlat(_))
        ));
    }

    #[test]
    fn basicness_examples() {
        let x = [0.1, 0.2, -0.3];
        assert!(basicness_check(
            &cube(3),
            &standard_r3(),
            &|p| p[0] * p[2],
            &x,
            1e-6
        ));

        let r4 = FormPair::constant(omega_of(4, &[(0, 1, 1.0)]), basis_covector(4, 2));
        let y = [0.1, 0.2, -0.3, 0.4];
        assert!(!basicness_check(&cube(4), &r4, &|p| p[3], &y, 1e-6));
        assert!(basicness_check(
            &cube(4),
            &r4,
            &|p| p[0] * p[0] + p[2],
            &y,
            1e-6
        ));
    }
}
