use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// One chart coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Angle-like coordinate identified modulo `upper − lower`.
    pub periodic: bool,
    pub count: usize,
}

impl Axis {
    pub fn interval(name: &str, lower: f64, upper: f64, count: usize) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            periodic: false,
            count,
        }
    }

    pub fn circle(name: &str, period: f64, count: usize) -> Self {
        Self {
            name: name.into(),
            lower: 0.0,
            upper: period,
            periodic: true,
            count,
        }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    fn spacing(&self) -> f64 {
        if self.periodic {
            self.range() / self.count as f64
        } else {
            self.range() / (self.count + 1) as f64
        }
    }

    /// Non-periodic samples sit strictly inside the bounds so central
    /// differences never leave the chart.
    pub fn sample(&self, index: usize) -> f64 {
        if self.periodic {
            self.lower + self.range() * index as f64 / self.count as f64
        } else {
            self.lower + self.range() * (index + 1) as f64 / (self.count + 1) as f64
        }
    }
}

/// Restricts a coordinate pair to the closed disk `x² + y² ≤ radius²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disk {
    pub axes: [usize; 2],
    pub radius: f64,
}

/// A single coordinate box, possibly with periodic axes and disk truncations,
/// together with its sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartedManifold {
    axes: Vec<Axis>,
    disks: Vec<Disk>,
}

pub const MIN_GRID_COUNT: usize = 3;

impl ChartedManifold {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument(
                "chart needs at least one axis".into(),
            ));
        }
        for a in &axes {
            if !(a.lower < a.upper) || !a.lower.is_finite() || !a.upper.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "axis {} has bounds [{}, {}]",
                    a.name, a.lower, a.upper
                )));
            }
            if a.count < MIN_GRID_COUNT {
                return Err(Error::InvalidArgument(format!(
                    "axis {} has {} grid samples (minimum {MIN_GRID_COUNT})",
                    a.name, a.count
                )));
            }
        }
        Ok(Self {
            axes,
            disks: Vec::new(),
        })
    }

    pub fn with_disk(mut self, axes: [usize; 2], radius: f64) -> Result<Self> {
        if axes[0] == axes[1] || axes.iter().any(|&a| a >= self.dim()) || radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "invalid disk on axes {axes:?} with radius {radius}"
            )));
        }
        self.disks.push(Disk { axes, radius });
        Ok(self)
    }

    pub fn with_grid_counts(mut self, counts: &[usize]) -> Result<Self> {
        if counts.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} grid counts for a {}-dimensional chart",
                counts.len(),
                self.dim()
            )));
        }
        for (a, &c) in self.axes.iter_mut().zip(counts) {
            a.count = c;
        }
        Self::new(self.axes).map(|m| Self {
            disks: self.disks,
            ..m
        })
    }

    /// Cartesian product of charts; disks of `other` are re-indexed.
    pub fn product(&self, other: &Self) -> Self {
        let offset = self.dim();
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        let mut disks = self.disks.clone();
        disks.extend(other.disks.iter().map(|d| Disk {
            axes: [d.axes[0] + offset, d.axes[1] + offset],
            radius: d.radius,
        }));
        Self { axes, disks }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn grid_counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(Axis::spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Default finite-difference step: `1e-5` times the smallest coordinate range.
    pub fn default_step(&self) -> f64 {
        1e-5 * self
            .axes
            .iter()
            .map(Axis::range)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_step(&self, h: f64) -> Result<()> {
        let limit = 0.5 * self.min_spacing();
        if !(h > 0.0) || h >= limit {
            return Err(Error::StepTooLarge { step: h, limit });
        }
        Ok(())
    }

    fn in_disks(&self, x: &[f64]) -> bool {
        self.disks.iter().all(|d| {
            let (a, b) = (x[d.axes[0]], x[d.axes[1]]);
            a * a + b * b <= d.radius * d.radius * (1.0 + 1e-12)
        })
    }

    /// Inside the chart (periodic coordinates are unrestricted).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| a.periodic || (v > a.lower && v < a.upper))
            && self.in_disks(x)
    }

    /// Period of each axis, `None` for non-periodic ones.
    pub fn periods(&self) -> Vec<Option<f64>> {
        self.axes
            .iter()
            .map(|a| a.periodic.then(|| a.range()))
            .collect()
    }

    /// Max-norm distance, comparing periodic coordinates modulo their period.
    pub fn separation(&self, a: &[f64], b: &[f64]) -> f64 {
        self.periods()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(&p, (&u, &v))| crate::numeric::periodic_difference(u, v, p).abs())
            .fold(0.0, f64::max)
    }

    /// Reduces periodic coordinates into `[lower, upper)`.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .zip(x)
            .map(|(a, &v)| {
                if a.periodic {
                    a.lower + (v - a.lower).rem_euclid(a.range())
                } else {
                    v
                }
            })
            .collect()
    }

    /// Uniform random point in the chart, kept a margin away from non-periodic bounds.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let x: Vec<f64> = self
                .axes
                .iter()
                .map(|a| {
                    if a.periodic {
                        a.lower + a.range() * rng.random::<f64>()
                    } else {
                        let margin = 0.05 * a.range();
                        a.lower + margin + (a.range() - 2.0 * margin) * rng.random::<f64>()
                    }
                })
                .collect();
            if self.in_disks(&x) {
                return x;
            }
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::build(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub multi_index: Vec<usize>,
    pub coords: Vec<f64>,
    /// On a non-periodic face of the box or next to a point removed by a disk.
    pub on_boundary: bool,
}

/// The active sample points of a chart with their adjacency.
#[derive(Debug, Clone)]
pub struct Grid {
    counts: Vec<usize>,
    periodic: Vec<bool>,
    points: Vec<GridPoint>,
    lookup: Vec<Option<u32>>,
}

impl Grid {
    fn build(chart: &ChartedManifold) -> Self {
        let counts = chart.grid_counts();
        let periodic: Vec<bool> = chart.axes.iter().map(|a| a.periodic).collect();
        let total: usize = counts.iter().product();
        let mut lookup = vec![None; total];
        let mut points = Vec::new();
        let mut multi = vec![0usize; counts.len()];
        for flat in 0..total {
            let coords: Vec<f64> = multi
                .iter()
                .zip(&chart.axes)
                .map(|(&i, a)| a.sample(i))
                .collect();
            if chart.in_disks(&coords) {
                lookup[flat] = Some(points.len() as u32);
                points.push(GridPoint {
                    multi_index: multi.clone(),
                    coords,
                    on_boundary: false,
                });
            }
            for (axis, idx) in multi.iter_mut().enumerate().rev() {
                *idx += 1;
                if *idx < counts[axis] {
                    break;
                }
                *idx = 0;
            }
        }
        let mut grid = Self {
            counts,
            periodic,
            points,
            lookup,
        };
        let boundary: Vec<bool> = (0..grid.points.len())
            .map(|p| grid.touches_boundary(p))
            .collect();
        for (pt, b) in grid.points.iter_mut().zip(boundary) {
            pt.on_boundary = b;
        }
        grid
    }

    fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    fn step(&self, multi: &[usize], axis: usize, forward: bool) -> Option<Vec<usize>> {
        let n = self.counts[axis];
        let i = multi[axis];
        let j = match (forward, self.periodic[axis]) {
            (true, _) if i + 1 < n => i + 1,
            (true, true) => 0,
            (false, _) if i > 0 => i - 1,
            (false, true) => n - 1,
            _ => return None,
        };
        let mut m = multi.to_vec();
        m[axis] = j;
        Some(m)
    }

    fn touches_boundary(&self, pos: usize) -> bool {
        let multi = &self.points[pos].multi_index;
        (0..self.counts.len()).any(|axis| {
            [true, false]
                .iter()
                .any(|&fwd| match self.step(multi, axis, fwd) {
                    None => true,
                    Some(m) => self.lookup[self.flat_index(&m)].is_none(),
                })
        })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// At most `max` points taken at a fixed stride, so the selection is deterministic.
    pub fn thinned(&self, max: usize) -> Vec<&GridPoint> {
        let stride = self.points.len().div_ceil(max.max(1)).max(1);
        self.points.iter().step_by(stride).collect()
    }

    /// Positions of the active axial neighbours of point `pos` (periodic axes wrap).
    pub fn neighbors(&self, pos: usize) -> Vec<usize> {
        let multi = &self.points[pos].multi_index;
        let mut out = Vec::new();
        for axis in 0..self.counts.len() {
            for fwd in [true, false] {
                if let Some(m) = self.step(multi, axis, fwd) {
                    if let Some(p) = self.lookup[self.flat_index(&m)] {
                        let p = p as usize;
                        if p != pos && !out.contains(&p) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_samples_and_periodic_samples() {
        let a = Axis::interval("x", -2.0, 2.0, 3);
        assert_eq!((a.sample(0), a.sample(1), a.sample(2)), (-1.0, 0.0, 1.0));
        let c = Axis::circle("t", 1.0, 4);
        assert_eq!(c.sample(3), 0.75);
    }

    #[test]
    fn rejects_bad_charts() {
        assert!(ChartedManifold::new(vec![Axis::interval("x", 1.0, 0.0, 3)]).is_err());
        assert!(ChartedManifold::new(vec![Axis::interval("x", 0.0, 1.0, 2)]).is_err());
        assert!(ChartedManifold::new(vec![]).is_err());
    }

    #[test]
    fn grid_adjacency_wraps_periodic_axes() {
        let m = ChartedManifold::new(vec![
            Axis::interval("x", 0.0, 1.0, 3),
            Axis::circle("t", 1.0, 4),
        ])
        .unwrap();
        let g = m.grid();
        assert_eq!(g.len(), 12);
        // (x index 1, t index 0) has neighbours in x (2) and t (wrapping, 2).
        let pos = g
            .points()
            .iter()
            .position(|p| p.multi_index == vec![1, 0])
            .unwrap();
        assert_eq!(g.neighbors(pos).len(), 4);
        assert!(!g.points()[pos].on_boundary);
        let edge = g
            .points()
            .iter()
            .position(|p| p.multi_index == vec![0, 2])
            .unwrap();
        assert!(g.points()[edge].on_boundary);
    }

    #[test]
    fn disks_mask_points_and_mark_boundary() {
        let m = ChartedManifold::new(vec![
            Axis::interval("x", -2.0, 2.0, 9),
            Axis::interval("y", -2.0, 2.0, 9),
        ])
        .unwrap()
        .with_disk([0, 1], 2.0)
        .unwrap();
        let g = m.grid();
        assert!(g.len() < 81);
        assert!(g.points().iter().all(|p| m.contains(&p.coords)));
        let origin = g
            .points()
            .iter()
            .find(|p| p.coords == vec![0.0, 0.0])
            .unwrap();
        assert!(!origin.on_boundary);
    }

    #[test]
    fn step_limits() {
        let m = ChartedManifold::new(vec![Axis::interval("x", 0.0, 1.0, 3)]).unwrap();
        assert!(m.check_step(m.default_step()).is_ok());
        assert!(matches!(m.check_step(0.2), Err(Error::StepTooLarge { .. })));
    }
}
