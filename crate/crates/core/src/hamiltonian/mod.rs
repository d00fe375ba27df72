//! Torus actions on precosymplectic scenarios: action and moment-map
//! verification, clean actions, moment bodies, Morse–Bott analysis and
//! reduction at the zero level.

mod action;
mod moment_body;
mod morse;
mod reduction;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{self, VectorField};

pub use action::{
    clean_action_check, detect_null_ideal, validate_action, verify_moment_map,
    verify_precosymplectic_action, ActionReport, ActionValidation, CleanReport, MomentMapReport,
    NullIdeal, DEFAULT_TOL_ACTION,
};
pub use moment_body::{convexity_certificate, moment_body, FacetOrigin, Halfspace, MomentBody};
pub use morse::{
    morse_bott_analysis, CriticalComponent, MorseBottReport, MorseOptions, DEFAULT_TOL_CRIT,
    DEFAULT_TOL_EIG,
};
pub use reduction::{reduce_at_zero, reduction_discrepancy, rotated_slice, Reduction, SliceParam};

pub type ActionMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type MomentMapFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// A torus `𝕋ⁿ` acting on a chart, with fundamental fields, an optional
/// moment map and the declared null subtorus `𝔫`.
///
/// The moment map takes values in `ℝ^m`; row `c` of `moment_basis` is the
/// generator `ξ` whose component function is `μ_c = μ^ξ`. Together with the
/// subtorus rows (on which `μ^ξ ≡ 0`) they must span `ℝⁿ`.
#[derive(Clone)]
pub struct TorusActionSpec {
    torus_rank: usize,
    act: ActionMap,
    fundamental_fields: Vec<VectorField>,
    moment_map: Option<MomentMapFn>,
    moment_basis: DMatrix<f64>,
    subtorus: Vec<Vec<i64>>,
    /// Properness of `μ` is not decidable from samples; scenarios declare it.
    pub proper_declared: bool,
}

impl fmt::Debug for TorusActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusActionSpec")
            .field("torus_rank", &self.torus_rank)
            .field("moment_dim", &self.moment_dim())
            .field("subtorus", &self.subtorus)
            .field("proper_declared", &self.proper_declared)
            .finish_non_exhaustive()
    }
}

impl TorusActionSpec {
    pub fn new(
        torus_rank: usize,
        act: ActionMap,
        fundamental_fields: Vec<VectorField>,
    ) -> Result<Self> {
        if fundamental_fields.len() != torus_rank {
            return Err(Error::ShapeMismatch(format!(
                "{} fundamental fields for a rank-{torus_rank} torus",
                fundamental_fields.len()
            )));
        }
        Ok(Self {
            torus_rank,
            act,
            fundamental_fields,
            moment_map: None,
            moment_basis: DMatrix::zeros(0, torus_rank),
            subtorus: Vec::new(),
            proper_declared: false,
        })
    }

    pub fn with_subtorus(mut self, rows: Vec<Vec<i64>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != self.torus_rank) {
            return Err(Error::ShapeMismatch("subtorus row length".into()));
        }
        self.subtorus = rows;
        Ok(self)
    }

    pub fn with_moment_map(mut self, basis: DMatrix<f64>, map: MomentMapFn) -> Result<Self> {
        if basis.ncols() != self.torus_rank {
            return Err(Error::ShapeMismatch(format!(
                "moment basis has {} columns for a rank-{} torus",
                basis.ncols(),
                self.torus_rank
            )));
        }
        self.moment_basis = basis;
        self.moment_map = Some(map);
        Ok(self)
    }

    pub fn declare_proper(mut self, proper: bool) -> Self {
        self.proper_declared = proper;
        self
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_rank
    }

    pub fn subtorus(&self) -> &[Vec<i64>] {
        &self.subtorus
    }

    pub fn subtorus_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.subtorus.len(), self.torus_rank, |i, j| {
            self.subtorus[i][j] as f64
        })
    }

    pub fn moment_basis(&self) -> &DMatrix<f64> {
        &self.moment_basis
    }

    pub fn moment_dim(&self) -> usize {
        self.moment_basis.nrows()
    }

    pub fn has_moment_map(&self) -> bool {
        self.moment_map.is_some()
    }

    pub fn act(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        (self.act)(theta, x)
    }

    pub fn action_map(&self) -> &ActionMap {
        &self.act
    }

    pub fn fundamental_fields(&self) -> &[VectorField] {
        &self.fundamental_fields
    }

    /// `ξ_M(x)` for a generator given in the standard basis of `ℝⁿ`.
    pub fn fundamental_field(&self, xi: &[f64], x: &[f64]) -> DVector<f64> {
        self.fundamental_fields
            .iter()
            .zip(xi)
            .filter(|(_, &c)| c != 0.0)
            .map(|(f, &c)| f(x) * c)
            .reduce(|a, b| a + b)
            .unwrap_or_else(|| DVector::zeros(x.len()))
    }

    /// Columns `ξ_{1,M}(x), …, ξ_{n,M}(x)`.
    pub fn fields_at(&self, x: &[f64]) -> DMatrix<f64> {
        let cols: Vec<_> = self.fundamental_fields.iter().map(|f| f(x)).collect();
        if cols.is_empty() {
            return DMatrix::zeros(x.len(), 0);
        }
        DMatrix::from_columns(&cols)
    }

    pub fn moment(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.moment_map
            .as_ref()
            .map(|m| m(x))
            .ok_or(Error::NoMomentMap)
    }

    pub fn moment_map(&self) -> Option<&MomentMapFn> {
        self.moment_map.as_ref()
    }

    /// Coefficients `c` with `μ^ξ = c · μ`, found by writing
    /// `ξ = Σ c_i b_i + (subtorus part)`.
    pub fn moment_coefficients(&self, xi: &[f64]) -> Result<DVector<f64>> {
        if self.moment_map.is_none() {
            return Err(Error::NoMomentMap);
        }
        if xi.len() != self.torus_rank {
            return Err(Error::ShapeMismatch(format!(
                "generator of length {} for a rank-{} torus",
                xi.len(),
                self.torus_rank
            )));
        }
        let m = self.moment_dim();
        let k = self.subtorus.len();
        let mut span = DMatrix::zeros(self.torus_rank, m + k);
        span.columns_mut(0, m)
            .copy_from(&self.moment_basis.transpose());
        span.columns_mut(m, k)
            .copy_from(&self.subtorus_matrix().transpose());
        let target = DVector::from_column_slice(xi);
        let sol = crate::geometry::min_norm_solve(&span, &target, 1e-12).map_err(|_| {
            Error::InvalidArgument(format!(
                "generator {xi:?} is outside the span of the moment basis and subtorus"
            ))
        })?;
        Ok(sol.rows(0, m).into_owned())
    }

    /// The component function `μ^ξ`.
    pub fn moment_component(
        &self,
        xi: &[f64],
    ) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + '_> {
        let c = self.moment_coefficients(xi)?;
        Ok(move |x: &[f64]| self.moment(x).map(|mu| c.dot(&mu)).unwrap_or(f64::NAN))
    }

    /// Jacobian of the moment map (rows = components).
    pub fn moment_jacobian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let mu = self.moment_map.as_ref().ok_or(Error::NoMomentMap)?;
        Ok(numeric::jacobian(&|y| mu(y).as_slice().to_vec(), x, h))
    }
}

/// The `i`-th standard generator of `ℝⁿ`.
pub fn standard_generator(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
}
