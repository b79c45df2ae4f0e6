//! Intervals and functions sampled on uniform midpoint grids.

use serde::{Deserialize, Serialize};

use crate::par;

/// A closed real interval `[lo, hi]`; serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Interval spanned by two points in either order.
    pub fn hull(a: f64, b: f64) -> Self {
        Interval::new(a.min(b), a.max(b))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Open-interval containment.
    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    /// Intersection, or `None` when the overlap has no interior.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval::new(lo, hi))
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }

    /// Midpoint `(k + ½)/n` of cell `k` of the uniform `n`-cell grid.
    pub fn midpoint(&self, k: usize, n: usize) -> f64 {
        self.lo + self.width() * (k as f64 + 0.5) / n as f64
    }

    pub fn midpoints(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.midpoint(k, n)).collect()
    }

    /// Cell `[lo + k w, lo + (k+1) w]` of the uniform `n`-cell grid.
    pub fn cell(&self, k: usize, n: usize) -> Interval {
        let w = self.width() / n as f64;
        Interval::new(self.lo + w * k as f64, self.lo + w * (k + 1) as f64)
    }
}

/// Rule used to evaluate a [`GridFunction`] between its midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Value of the cell containing the point (a step function on cells).
    #[default]
    Nearest,
    /// Four-point Lagrange interpolation through neighbouring midpoints,
    /// with one-sided stencils at the ends of the support.
    Cubic,
}

/// An observable sampled at the `N` midpoints of a uniform grid on `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub support: Interval,
    pub values: Vec<f64>,
    pub interpolation: Interpolation,
}

/// Offsets smaller than this (in cell units) evaluate to the node value
/// exactly; keeps samples taken through `H∘H⁻¹` bit-identical.
const SNAP: f64 = 1e-9;

impl GridFunction {
    pub fn new(support: Interval, values: Vec<f64>, interpolation: Interpolation) -> Self {
        GridFunction { support, values, interpolation }
    }

    pub fn constant(support: Interval, n: usize, c: f64) -> Self {
        GridFunction::new(support, vec![c; n], Interpolation::Nearest)
    }

    /// Samples `f` at the midpoints (in parallel when enabled).
    pub fn from_fn<F>(support: Interval, n: usize, interpolation: Interpolation, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let values = par::map_range(n, |k| f(support.midpoint(k, n)));
        GridFunction::new(support, values, interpolation)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.support.midpoint(k, self.n())
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.support.midpoints(self.n())
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_index(&self, x: f64) -> usize {
        let n = self.n();
        let t = (x - self.support.lo) / self.support.width() * n as f64;
        if t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(n - 1)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.interpolation {
            Interpolation::Nearest => self.values[self.cell_index(x)],
            Interpolation::Cubic => self.eval_cubic(x),
        }
    }

    fn eval_cubic(&self, x: f64) -> f64 {
        let n = self.n();
        if n < 4 {
            return self.values[self.cell_index(x)];
        }
        // position in node units: node k sits at t = k
        let t = (x - self.support.lo) / self.support.width() * n as f64 - 0.5;
        let nearest = t.round();
        if (t - nearest).abs() < SNAP && nearest >= 0.0 && nearest <= (n - 1) as f64 {
            return self.values[nearest as usize];
        }
        let base = (t.floor() as i64 - 1).clamp(0, n as i64 - 4) as usize;
        let u = t - base as f64;
        let v = &self.values[base..base + 4];
        let w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let w1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let w2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let w3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3]
    }

    /// Midpoint-rule integral against Lebesgue measure.
    pub fn integral(&self) -> f64 {
        par::ordered_sum(&self.values) * self.support.width() / self.n() as f64
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            support: self.support,
            values: self.values.iter().map(|&v| f(v)).collect(),
            interpolation: self.interpolation,
        }
    }

    /// `a·self + b·other` on a common grid.
    ///
    /// # Panics
    /// If the grids differ in size.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        assert_eq!(self.n(), other.n(), "grid size mismatch");
        GridFunction {
            support: self.support,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
            interpolation: self.interpolation,
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_are_cell_centres() {
        let i = Interval::UNIT;
        assert_eq!(i.midpoint(0, 4), 0.125);
        assert_eq!(i.midpoint(3, 4), 0.875);
        let c = i.cell(1, 4);
        assert_eq!((c.lo, c.hi), (0.25, 0.5));
    }

    #[test]
    fn nearest_lookup_is_cell_value() {
        let g = GridFunction::new(Interval::UNIT, vec![1.0, 2.0, 3.0, 4.0], Interpolation::Nearest);
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(0.2499), 1.0);
        assert_eq!(g.eval(0.25), 2.0);
        assert_eq!(g.eval(1.0), 4.0);
        assert_eq!(g.eval(-3.0), 1.0);
    }

    #[test]
    fn cubic_reproduces_cubic_polynomials() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 3.0 * x * x * x;
        let g = GridFunction::from_fn(Interval::new(-1.0, 2.0), 64, Interpolation::Cubic, p);
        for &x in &[-1.0, -0.99, -0.3, 0.0, 0.123, 1.5, 1.999, 2.0] {
            assert!((g.eval(x) - p(x)).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn cubic_snaps_to_nodes() {
        let g = GridFunction::from_fn(Interval::UNIT, 16, Interpolation::Cubic, |x| (7.0 * x).sin());
        let x = g.midpoint(5);
        assert_eq!(g.eval(x + 1e-14), g.values[5]);
    }

    #[test]
    fn cubic_is_accurate_for_smooth_functions() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).cos();
        let g = GridFunction::from_fn(Interval::UNIT, 4096, Interpolation::Cubic, f);
        let worst = (0..1000).map(|i| i as f64 / 999.0).map(|x| (g.eval(x) - f(x)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn integral_of_constant() {
        let g = GridFunction::constant(Interval::new(-1.0, 1.0), 10, 3.0);
        assert!((g.integral() - 6.0).abs() < 1e-14);
    }
}
