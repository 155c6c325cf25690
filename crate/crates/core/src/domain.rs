//! Discretized hyperrectangular input domains.
//!
//! Grid indices, not floating-point endpoints, are the canonical
//! representation: axis `k`'s points are `origin + i * step` for `i` in an
//! inclusive index range, and every split is index arithmetic. Coordinates
//! are derived, so exact counting never depends on float interval endpoints.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;

/// One discretized axis: grid point `i` (for `index_lo <= i <= index_hi`)
/// sits at `origin + i * step`. `origin` is the lower bound of the axis
/// before any splitting, so sub-axes produced by splits keep bit-identical
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    origin: f64,
    step: f64,
    index_lo: u64,
    index_hi: u64,
}

impl GridAxis {
    /// Discretize `[lo, hi]` with pitch `step`. The number of steps is the
    /// largest integer `n` with `lo + n*step <= hi` up to float round-off.
    pub fn from_bounds(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidDomain(format!("bad axis bounds [{lo}, {hi}]")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidDomain(format!("bad step {step}")));
        }
        let steps = ((hi - lo) / step + 1e-9).floor() as u64;
        Ok(GridAxis { origin: lo, step, index_lo: 0, index_hi: steps })
    }

    pub fn from_indices(origin: f64, step: f64, index_lo: u64, index_hi: u64) -> Result<Self> {
        if index_lo > index_hi {
            return Err(Error::InvalidDomain(format!("index_lo {index_lo} > index_hi {index_hi}")));
        }
        Ok(GridAxis { origin, step, index_lo, index_hi })
    }

    pub fn index_lo(&self) -> u64 {
        self.index_lo
    }

    pub fn index_hi(&self) -> u64 {
        self.index_hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Coordinate of grid index `i`.
    #[inline]
    pub fn coord(&self, i: u64) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn lo(&self) -> f64 {
        self.coord(self.index_lo)
    }

    pub fn hi(&self) -> f64 {
        self.coord(self.index_hi)
    }

    pub fn point_count(&self) -> u64 {
        self.index_hi - self.index_lo + 1
    }

    /// Nearest grid index to coordinate `v`, ties toward the low side,
    /// clamped into the axis range.
    fn snap(&self, v: f64) -> u64 {
        let t = (v - self.origin) / self.step;
        let floor = t.floor();
        let k = if t - floor == 0.5 { floor } else { t.round() };
        let k = if k < 0.0 { 0 } else { k as u64 };
        k.clamp(self.index_lo, self.index_hi)
    }
}

/// The precondition: a product of [`GridAxis`] ranges, one per input.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDomain {
    axes: Vec<GridAxis>,
}

/// A pair of sub-domains produced by a split, together with each side's
/// exact fraction of the parent's grid points.
#[derive(Debug, Clone)]
pub struct Split {
    pub low: InputDomain,
    pub high: InputDomain,
    pub alpha_low: BigRational,
    pub alpha_high: BigRational,
}

impl InputDomain {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDomain("no axes".into()));
        }
        Ok(InputDomain { axes })
    }

    /// Uniform discretization of per-axis bounds with a single pitch.
    pub fn from_bounds(bounds: &[(f64, f64)], step: f64) -> Result<Self> {
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| GridAxis::from_bounds(lo, hi, step))
            .collect::<Result<Vec<_>>>()?;
        InputDomain::new(axes)
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Exact number of grid points (can exceed 64 bits on fine grids).
    pub fn total_points(&self) -> BigUint {
        self.axes
            .iter()
            .fold(BigUint::one(), |acc, a| acc * BigUint::from(a.point_count()))
    }

    /// `total_points` as u64 when it fits; used for leaf-size checks.
    pub fn total_points_u64(&self) -> Option<u64> {
        self.total_points().to_u64()
    }

    /// Axis with the most grid points, ties resolved to the lowest index.
    /// `None` when every axis is a single point.
    pub fn widest_splittable_axis(&self) -> Option<usize> {
        let (best, axis) = self
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| (a.point_count(), i))
            .fold((0, 0), |acc, (c, i)| if c > acc.0 { (c, i) } else { acc });
        (best >= 2).then_some(axis)
    }

    /// Next splittable axis at or after `start`, scanning cyclically.
    pub fn next_splittable_axis(&self, start: usize) -> Option<usize> {
        (0..self.dim())
            .map(|k| (start + k) % self.dim())
            .find(|&i| self.axes[i].point_count() >= 2)
    }

    /// Split `axis` at the middle grid index: `[i0..m]` and `[m+1..i1]` with
    /// `m = (i0 + i1) / 2`, so the halves differ by at most one point.
    pub fn split_equal(&self, axis: usize) -> Result<(InputDomain, InputDomain)> {
        let a = &self.axes[axis];
        if a.point_count() < 2 {
            return Err(Error::NotSplittable(axis));
        }
        let m = (a.index_lo + a.index_hi) / 2;
        Ok(self.split_at_index(axis, m))
    }

    /// Split `axis` at coordinate `v`, snapped to the nearest grid index
    /// (ties toward the low side) and clamped so both sides are nonempty.
    /// Returns each side's exact fraction of this domain's points.
    pub fn split_at_value(&self, axis: usize, v: f64) -> Result<Split> {
        let a = &self.axes[axis];
        if a.point_count() < 2 {
            return Err(Error::NotSplittable(axis));
        }
        let m = a.snap(v).min(a.index_hi - 1);
        let (low, high) = self.split_at_index(axis, m);
        let n = BigUint::from(a.point_count());
        let n_low = BigUint::from(m - a.index_lo + 1);
        let n_high = BigUint::from(a.index_hi - m);
        Ok(Split {
            low,
            high,
            alpha_low: BigRational::new(n_low.into(), n.clone().into()),
            alpha_high: BigRational::new(n_high.into(), n.into()),
        })
    }

    fn split_at_index(&self, axis: usize, m: u64) -> (InputDomain, InputDomain) {
        let a = &self.axes[axis];
        debug_assert!(m >= a.index_lo && m < a.index_hi);
        let mut low = self.clone();
        let mut high = self.clone();
        low.axes[axis].index_hi = m;
        high.axes[axis].index_lo = m + 1;
        (low, high)
    }

    /// Bounding rectangle: per-axis `(lo, hi)` coordinates.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo(), a.hi())).collect()
    }

    /// `n` independent uniform grid points: each axis index is drawn
    /// uniformly, so every grid point is equiprobable.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_point(rng)).collect()
    }

    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| a.coord(rng.random_range(a.index_lo..=a.index_hi)))
            .collect()
    }

    /// Every grid point exactly once, in lexicographic index order.
    /// Callers are responsible for keeping `total_points` within budget.
    pub fn enumerate_points(&self) -> PointIter<'_> {
        PointIter {
            domain: self,
            indices: self.axes.iter().map(|a| a.index_lo).collect(),
            done: false,
        }
    }
}

pub struct PointIter<'a> {
    domain: &'a InputDomain,
    indices: Vec<u64>,
    done: bool,
}

impl Iterator for PointIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let point = self
            .indices
            .iter()
            .zip(&self.domain.axes)
            .map(|(&i, a)| a.coord(i))
            .collect();
        // odometer increment, last axis fastest
        for k in (0..self.indices.len()).rev() {
            let a = &self.domain.axes[k];
            if self.indices[k] < a.index_hi {
                self.indices[k] += 1;
                for (later, ax) in self.indices[k + 1..].iter_mut().zip(&self.domain.axes[k + 1..]) {
                    *later = ax.index_lo;
                }
                return Some(point);
            }
        }
        self.done = true;
        Some(point)
    }
}
