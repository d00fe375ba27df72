use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 10_000;
pub const DEFAULT_HOLONOMY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolonomyDescriptor {
    Trivial,
    CyclicFinite {
        q: usize,
    },
    /// No return within `n_max` iterates.
    InfiniteCyclic {
        n_max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyResult {
    pub descriptor: HolonomyDescriptor,
    /// Angle from the test point to its image, for planar transversals.
    pub generator_angle: Option<f64>,
    pub iterations_used: usize,
    /// Distance of the closest return seen.
    pub closest_return: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Order of the return map on a transversal through a fixed origin,
/// detected by iterating from `test_point`.
pub fn mapping_torus_holonomy(
    return_map: &dyn Fn(&[f64]) -> Vec<f64>,
    test_point: &[f64],
    n_max: usize,
    tol: f64,
) -> Result<HolonomyResult> {
    let origin = vec![0.0; test_point.len()];
    let drift = distance(&return_map(&origin), &origin);
    if !(drift <= tol) {
        return Err(Error::OriginNotFixed(drift));
    }
    if test_point.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidArgument(
            "test point must differ from the origin".into(),
        ));
    }

    let first = return_map(test_point);
    let generator_angle = (test_point.len() == 2).then(|| {
        let (a, b) = ((test_point[0], test_point[1]), (first[0], first[1]));
        (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1)
    });

    let mut current = first;
    let mut closest_return = f64::INFINITY;
    for q in 1..=n_max {
        let d = distance(&current, test_point);
        closest_return = closest_return.min(d);
        if d <= tol {
            let descriptor = if q == 1 {
                HolonomyDescriptor::Trivial
            } else {
                HolonomyDescriptor::CyclicFinite { q }
            };
            return Ok(HolonomyResult {
                descriptor,
                generator_angle,
                iterations_used: q,
                closest_return,
            });
        }
        current = return_map(&current);
    }
    Ok(HolonomyResult {
        descriptor: HolonomyDescriptor::InfiniteCyclic { n_max },
        generator_angle,
        iterations_used: n_max,
        closest_return,
    })
}
