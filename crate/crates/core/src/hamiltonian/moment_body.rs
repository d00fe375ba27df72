use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::Scenario;
use crate::error::{Error, Result};

/// Where a facet of the clipped hull comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetOrigin {
    /// A genuine facet of the moment image.
    Image,
    /// A side of the clip box.
    ClipBox,
    /// Supported only by samples on the edge of the chart (disk truncation or box face).
    ChartTruncation,
}

/// `normal · p ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub origin: FacetOrigin,
}

impl Halfspace {
    pub fn violation(&self, p: &[f64]) -> f64 {
        self.normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBody {
    pub dim: usize,
    /// Distinct moment values over the grid.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
    pub sample_count: usize,
    pub hull_vertices: Vec<Vec<f64>>,
    pub halfspaces: Vec<Halfspace>,
    pub clip_box: Vec<[f64; 2]>,
}

impl MomentBody {
    pub fn image_facets(&self) -> impl Iterator<Item = &Halfspace> {
        self.halfspaces
            .iter()
            .filter(|h| h.origin == FacetOrigin::Image)
    }

    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.violation(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn in_clip_box(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.clip_box)
            .all(|(v, b)| *v >= b[0] && *v <= b[1])
    }

    /// Largest halfspace violation over the samples inside the clip box.
    pub fn sample_violation(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| self.in_clip_box(s))
            .map(|s| self.max_violation(s).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Vertices as CSV with header `mu_1,…,mu_m`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record((1..=self.dim).map(|i| format!("mu_{i}")))
            .map_err(io)?;
        for v in &self.hull_vertices {
            w.write_record(v.iter().map(|c| format!("{c}")))
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

struct Sample {
    value: Vec<f64>,
    /// Every grid point with this value lies on the chart boundary.
    boundary: bool,
}

fn collect_samples(s: &Scenario) -> Result<Vec<Sample>> {
    let a = s.action()?;
    let grid = s.manifold.grid();
    let raw = grid
        .points()
        .par_iter()
        .map(|p| a.moment(&p.coords).map(|mu| (mu, p.on_boundary)))
        .collect::<Result<Vec<_>>>()?;
    let mut merged: BTreeMap<Vec<i64>, Sample> = BTreeMap::new();
    for (mu, boundary) in raw {
        if mu.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let key = mu.iter().map(|v| (v * 1e10).round() as i64).collect();
        merged
            .entry(key)
            .and_modify(|e| e.boundary &= boundary)
            .or_insert(Sample {
                value: mu.as_slice().to_vec(),
                boundary,
            });
    }
    Ok(merged.into_values().collect())
}

fn support_origin(samples: &[Sample], on_facet: impl Fn(&[f64]) -> bool) -> FacetOrigin {
    let mut support = samples.iter().filter(|s| on_facet(&s.value)).peekable();
    if support.peek().is_some() && support.all(|s| s.boundary) {
        FacetOrigin::ChartTruncation
    } else {
        FacetOrigin::Image
    }
}

/// Convex hull of the moment image on the grid, clipped to `clip_box`,
/// with V- and H-representations. Supports moment maps into `ℝ¹` and `ℝ²`.
pub fn moment_body(s: &Scenario, clip_box: &[[f64; 2]]) -> Result<MomentBody> {
    let a = s.action()?;
    if !a.has_moment_map() {
        return Err(Error::NoMomentMap);
    }
    let m = a.moment_dim();
    if m == 0 || m > 2 {
        return Err(Error::UnsupportedDimension(m));
    }
    if clip_box.len() != m || clip_box.iter().any(|b| !(b[0] < b[1])) {
        return Err(Error::ShapeMismatch(format!(
            "clip box must give {m} increasing intervals"
        )));
    }
    let samples = collect_samples(s)?;
    if samples.is_empty() {
        return Err(Error::EmptyImage);
    }
    let scale = samples
        .iter()
        .flat_map(|s| s.value.iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;
    let (hull_vertices, halfspaces) = if m == 1 {
        interval_body(&samples, clip_box[0], tol)?
    } else {
        planar_body(&samples, [clip_box[0], clip_box[1]], tol)?
    };
    Ok(MomentBody {
        dim: m,
        sample_count: samples.len(),
        samples: samples.into_iter().map(|s| s.value).collect(),
        hull_vertices,
        halfspaces,
        clip_box: clip_box.to_vec(),
    })
}

type Body = (Vec<Vec<f64>>, Vec<Halfspace>);

fn interval_body(samples: &[Sample], bounds: [f64; 2], tol: f64) -> Result<Body> {
    let lo = samples
        .iter()
        .map(|s| s.value[0])
        .fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.value[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (lo.max(bounds[0]), hi.min(bounds[1]));
    if a > b {
        return Err(Error::EmptyImage);
    }
    let end_origin = |end: f64, clipped: bool| {
        if clipped {
            FacetOrigin::ClipBox
        } else {
            support_origin(samples, |v| (v[0] - end).abs() <= tol)
        }
    };
    let halfspaces = vec![
        Halfspace {
            normal: vec![-1.0],
            offset: -a,
            origin: end_origin(lo, lo < bounds[0]),
        },
        Halfspace {
            normal: vec![1.0],
            offset: b,
            origin: end_origin(hi, hi > bounds[1]),
        },
    ];
    let vertices = if b - a <= tol {
        vec![vec![a]]
    } else {
        vec![vec![a], vec![b]]
    };
    Ok((vertices, halfspaces))
}

type P2 = [f64; 2];

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn norm(v: P2) -> f64 {
    v[0].hypot(v[1])
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Strict left turn, with near-collinear triples treated as collinear.
fn left_turn(o: P2, a: P2, b: P2) -> bool {
    cross(o, a, b) > 1e-9 * norm(sub(a, o)) * norm(sub(b, o))
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && !left_turn(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && !left_turn(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Sutherland–Hodgman clip of a convex counter-clockwise polygon against `n·p ≤ c`.
fn clip_polygon(poly: &[P2], n: P2, c: f64) -> Vec<P2> {
    let inside = |p: P2| n[0] * p[0] + n[1] * p[1] <= c;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fp, fq) = (n[0] * p[0] + n[1] * p[1] - c, n[0] * q[0] + n[1] * q[1] - c);
        if inside(p) {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn box_planes(bounds: [[f64; 2]; 2]) -> [(P2, f64); 4] {
    [
        ([-1.0, 0.0], -bounds[0][0]),
        ([1.0, 0.0], bounds[0][1]),
        ([0.0, -1.0], -bounds[1][0]),
        ([0.0, 1.0], bounds[1][1]),
    ]
}

fn simplify(poly: Vec<P2>, tol: f64) -> Vec<P2> {
    let mut pts: Vec<P2> = Vec::new();
    for p in poly {
        if pts.last().is_none_or(|&q| norm(sub(p, q)) > tol) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && norm(sub(pts[0], pts[pts.len() - 1])) <= tol {
        pts.pop();
    }
    if pts.len() < 3 {
        return pts;
    }
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        for i in 0..pts.len() {
            let (a, b, c) = (
                pts[(i + pts.len() - 1) % pts.len()],
                pts[i],
                pts[(i + 1) % pts.len()],
            );
            if !left_turn(a, b, c) {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    pts
}

fn on_box_side(p: P2, q: P2, bounds: [[f64; 2]; 2], tol: f64) -> bool {
    (0..2).any(|axis| {
        bounds[axis]
            .iter()
            .any(|&b| (p[axis] - b).abs() <= tol && (q[axis] - b).abs() <= tol)
    })
}

fn planar_body(samples: &[Sample], bounds: [[f64; 2]; 2], tol: f64) -> Result<Body> {
    let hull = convex_hull(samples.iter().map(|s| [s.value[0], s.value[1]]).collect());
    let mut clipped = hull.clone();
    if hull.len() >= 3 {
        for (n, c) in box_planes(bounds) {
            clipped = clip_polygon(&clipped, n, c);
        }
        clipped = simplify(clipped, tol);
    } else {
        clipped = clip_degenerate(&hull, bounds);
    }
    if clipped.is_empty() {
        return Err(Error::EmptyImage);
    }
    let vertices: Vec<Vec<f64>> = clipped.iter().map(|p| p.to_vec()).collect();
    let mut halfspaces = Vec::new();
    let line_origin =
        |n: P2, c: f64| support_origin(samples, |v| (n[0] * v[0] + n[1] * v[1] - c).abs() <= tol);

    if clipped.len() >= 3 {
        for i in 0..clipped.len() {
            let (p, q) = (clipped[i], clipped[(i + 1) % clipped.len()]);
            let d = sub(q, p);
            let len = norm(d);
            let n = [d[1] / len, -d[0] / len];
            let c = n[0] * p[0] + n[1] * p[1];
            let origin = if on_box_side(p, q, bounds, tol) {
                FacetOrigin::ClipBox
            } else {
                line_origin(n, c)
            };
            halfspaces.push(Halfspace {
                normal: n.to_vec(),
                offset: c,
                origin,
            });
        }
        return Ok((vertices, halfspaces));
    }

    // Point or segment: two opposite halfspaces along the line, two end caps.
    let p = clipped[0];
    let q = *clipped.last().unwrap();
    let d = sub(q, p);
    let (dir, normal) = if norm(d) > tol {
        let len = norm(d);
        ([d[0] / len, d[1] / len], [d[1] / len, -d[0] / len])
    } else {
        ([1.0, 0.0], [0.0, 1.0])
    };
    for sign in [1.0, -1.0] {
        let n = [sign * normal[0], sign * normal[1]];
        let c = n[0] * p[0] + n[1] * p[1];
        halfspaces.push(Halfspace {
            normal: n.to_vec(),
            offset: c,
            origin: line_origin(n, c),
        });
    }
    let original_ends = [hull[0], *hull.last().unwrap()];
    for (end, n) in [(q, dir), (p, [-dir[0], -dir[1]])] {
        let c = n[0] * end[0] + n[1] * end[1];
        let clipped_here = !original_ends.iter().any(|&e| norm(sub(e, end)) <= tol);
        halfspaces.push(Halfspace {
            normal: n.to_vec(),
            offset: c,
            origin: if clipped_here {
                FacetOrigin::ClipBox
            } else {
                support_origin(samples, |v| norm(sub([v[0], v[1]], end)) <= tol)
            },
        });
    }
    Ok((vertices, halfspaces))
}

/// Liang–Barsky clip of a point or segment to the box.
fn clip_degenerate(pts: &[P2], bounds: [[f64; 2]; 2]) -> Vec<P2> {
    let p = pts[0];
    let q = *pts.last().unwrap();
    let d = sub(q, p);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..2 {
        for (num, den) in [
            (p[axis] - bounds[axis][0], -d[axis]),
            (bounds[axis][1] - p[axis], d[axis]),
        ] {
            if den == 0.0 {
                if num < 0.0 {
                    return Vec::new();
                }
            } else {
                let t = num / den;
                if den < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
    }
    if t0 > t1 {
        return Vec::new();
    }
    let at = |t: f64| [p[0] + t * d[0], p[1] + t * d[1]];
    if pts.len() == 1 || t0 == t1 {
        vec![at(t0)]
    } else {
        vec![at(t0), at(t1)]
    }
}

/// Largest halfspace violation of midpoints of `pairs` random sample pairs
/// (samples inside the clip box only).
pub fn convexity_certificate<R: Rng + ?Sized>(body: &MomentBody, pairs: usize, rng: &mut R) -> f64 {
    let inside: Vec<&Vec<f64>> = body
        .samples
        .iter()
        .filter(|s| body.in_clip_box(s))
        .collect();
    if inside.is_empty() {
        return 0.0;
    }
    (0..pairs)
        .map(|_| {
            let (a, b) = (
                inside[rng.random_range(0..inside.len())],
                inside[rng.random_range(0..inside.len())],
            );
            let mid: Vec<f64> = a.iter().zip(b.iter()).map(|(u, v)| 0.5 * (u + v)).collect();
            body.max_violation(&mid).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_a_square_with_interior_points() {
        let pts = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        let h = convex_hull(pts);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn clipping_a_triangle() {
        let tri = vec![[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let clipped = clip_polygon(&tri, [1.0, 0.0], 1.0);
        let clipped = simplify(clipped, 1e-12);
        assert_eq!(clipped.len(), 4);
        assert!(clipped.iter().all(|p| p[0] <= 1.0 + 1e-12));
    }

    #[test]
    fn segment_clipping() {
        let seg = clip_degenerate(&[[-2.0, 0.0], [2.0, 0.0]], [[-1.0, 1.0], [-1.0, 1.0]]);
        assert_eq!(seg, vec![[-1.0, 0.0], [1.0, 0.0]]);
        assert!(clip_degenerate(&[[5.0, 5.0]], [[-1.0, 1.0], [-1.0, 1.0]]).is_empty());
    }
}
