use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::Scenario;
use crate::error::{Error, Result};
use crate::numeric;
use crate::tensor_point::SubspaceBasis;

/// Critical points: `‖dμ^ξ‖ ≤ DEFAULT_TOL_CRIT · max ‖dμ^ξ‖`.
pub const DEFAULT_TOL_CRIT: f64 = 1e-4;
/// Zero eigenvalues: `|λ| ≤ DEFAULT_TOL_EIG · max |λ|`.
pub const DEFAULT_TOL_EIG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorseOptions {
    pub tol_crit: f64,
    pub tol_eig: f64,
    /// Hessian step; defaults to `1e-3` times the smallest coordinate range.
    pub hessian_step: Option<f64>,
    /// Principal directions above this fraction of `σ_max` are tangent.
    pub tangent_ratio: f64,
}

impl Default for MorseOptions {
    fn default() -> Self {
        Self {
            tol_crit: DEFAULT_TOL_CRIT,
            tol_eig: DEFAULT_TOL_EIG,
            hessian_step: None,
            tangent_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalComponent {
    pub representative: Vec<f64>,
    pub value: f64,
    pub point_count: usize,
    pub tangent_dim: usize,
    pub normal_dim: usize,
    /// Negative eigenvalues of the Hessian restricted to the normal space.
    pub index: usize,
    /// Near-zero eigenvalues on the normal space; Morse–Bott requires 0.
    pub nullity: usize,
    /// Near-zero eigenvalues of the full Hessian, to compare with `tangent_dim`.
    pub hessian_nullity: usize,
    pub normal_eigenvalues: Vec<f64>,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseBottReport {
    pub generator: Vec<f64>,
    /// Absolute critical-point threshold actually used.
    pub crit_threshold: f64,
    pub components: Vec<CriticalComponent>,
    pub no_critical_points: bool,
    pub all_nondegenerate: bool,
    pub all_indices_even: bool,
    pub proper_declared: bool,
}

/// Grid search for the critical set of `μ^ξ`, clustered by adjacency, with
/// tangent estimation and the normal Hessian at each component.
pub fn morse_bott_analysis(
    s: &Scenario,
    xi: &[f64],
    opts: &MorseOptions,
) -> Result<MorseBottReport> {
    let a = s.action()?;
    let f = a.moment_component(xi)?;
    let m = &s.manifold;
    let h = m.default_step();
    let grid = m.grid();
    let gradients: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|p| {
            let g = numeric::gradient(&f, &p.coords, h).norm();
            if g.is_nan() {
                f64::INFINITY
            } else {
                g
            }
        })
        .collect();
    let max_grad = gradients
        .iter()
        .copied()
        .filter(|g| g.is_finite())
        .fold(0.0, f64::max);
    let threshold = opts.tol_crit * max_grad;
    let critical: Vec<bool> = gradients.iter().map(|&g| g <= threshold).collect();

    let mut seen = vec![false; grid.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..grid.len() {
        if !critical[start] || seen[start] {
            continue;
        }
        let mut cluster = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(p) = queue.pop_front() {
            cluster.push(p);
            for q in grid.neighbors(p) {
                if critical[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        clusters.push(cluster);
    }

    let hess_step = opts.hessian_step.unwrap_or_else(|| {
        1e-3 * m
            .axes()
            .iter()
            .map(|ax| ax.range())
            .fold(f64::INFINITY, f64::min)
    });
    if !(hess_step > 0.0) {
        return Err(Error::InvalidArgument(format!("Hessian step {hess_step}")));
    }
    let components = clusters
        .par_iter()
        .map(|cluster| {
            let pts: Vec<&Vec<f64>> = cluster.iter().map(|&i| &grid.points()[i].coords).collect();
            analyze_component(&f, &pts, s.dim(), hess_step, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MorseBottReport {
        generator: xi.to_vec(),
        crit_threshold: threshold,
        no_critical_points: components.is_empty(),
        all_nondegenerate: components.iter().all(|c| c.nondegenerate),
        all_indices_even: components.iter().all(|c| c.index % 2 == 0),
        components,
        proper_declared: a.proper_declared,
    })
}

fn analyze_component(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    pts: &[&Vec<f64>],
    dim: usize,
    hess_step: f64,
    opts: &MorseOptions,
) -> Result<CriticalComponent> {
    let count = pts.len();
    let centroid: Vec<f64> = (0..dim)
        .map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / count as f64)
        .collect();
    let representative = pts
        .iter()
        .min_by(|a, b| {
            let da: f64 = a.iter().zip(&centroid).map(|(x, c)| (x - c).powi(2)).sum();
            let db: f64 = b.iter().zip(&centroid).map(|(x, c)| (x - c).powi(2)).sum();
            da.total_cmp(&db)
        })
        .map(|p| (*p).clone())
        .unwrap_or(centroid.clone());

    let cloud = DMatrix::from_fn(count, dim, |i, j| pts[i][j] - centroid[j]);
    let tangent = if count < 2 {
        SubspaceBasis::empty(dim)
    } else {
        let svd = cloud.svd(false, true);
        let smax = svd.singular_values.max();
        let v_t = svd.v_t.as_ref().expect("requested V");
        let dirs: Vec<_> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| smax > 0.0 && s > opts.tangent_ratio * smax)
            .map(|(i, _)| v_t.row(i).transpose())
            .collect();
        SubspaceBasis::span(dim, &dirs, 1e-9)?
    };
    let normal = tangent.orthogonal_complement();

    let hess = numeric::hessian(f, &representative, hess_step);
    let full = SymmetricEigen::new(hess.clone()).eigenvalues;
    let lam_max = full.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let tol_eig = opts.tol_eig * lam_max;
    let hessian_nullity = full.iter().filter(|l| l.abs() <= tol_eig).count();

    let nmat = normal.matrix();
    let projected = nmat.transpose() * &hess * nmat;
    let mut normal_eigenvalues: Vec<f64> = if projected.nrows() == 0 {
        Vec::new()
    } else {
        SymmetricEigen::new(projected)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    };
    normal_eigenvalues.sort_by(f64::total_cmp);
    let index = normal_eigenvalues.iter().filter(|&&l| l < -tol_eig).count();
    let nullity = normal_eigenvalues
        .iter()
        .filter(|l| l.abs() <= tol_eig)
        .count();

    Ok(CriticalComponent {
        value: f(&representative),
        representative,
        point_count: count,
        tangent_dim: tangent.rank(),
        normal_dim: normal.rank(),
        index,
        nullity,
        hessian_nullity,
        normal_eigenvalues,
        nondegenerate: nullity == 0,
    })
}
