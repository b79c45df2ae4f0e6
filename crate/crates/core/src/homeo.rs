//! Monotone homeomorphisms between intervals, used for conjugacies and
//! observable transport.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grid::Interval;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomeoError {
    #[error("homeomorphism is not strictly monotone near x = {x}")]
    NotMonotone { x: f64 },
    #[error("knot table must have at least two strictly increasing abscissae and strictly monotone ordinates")]
    BadKnots,
}

/// A strictly monotone continuous bijection `H: domain → range` with an
/// evaluable inverse.
#[derive(Clone)]
pub struct Homeomorphism {
    pub domain: Interval,
    pub range: Interval,
    pub increasing: bool,
    pub label: String,
    forward: RealFn,
    inverse: RealFn,
    derivative: RealFn,
}

impl fmt::Debug for Homeomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Homeomorphism")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("range", &self.range)
            .field("increasing", &self.increasing)
            .finish()
    }
}

impl Homeomorphism {
    pub fn from_fns(
        label: impl Into<String>,
        domain: Interval,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let a = forward(domain.lo);
        let b = forward(domain.hi);
        Homeomorphism {
            domain,
            range: Interval::hull(a, b),
            increasing: b > a,
            label: label.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            derivative: Arc::new(derivative),
        }
    }

    pub fn identity(domain: Interval) -> Self {
        Self::from_fns("identity", domain, |x| x, |y| y, |_| 1.0)
    }

    /// `x ↦ x^a` on `[0, 1]`, `a > 0`.
    pub fn power(a: f64) -> Self {
        Self::from_fns(
            format!("power({a})"),
            Interval::UNIT,
            move |x: f64| x.max(0.0).powf(a),
            move |y: f64| y.max(0.0).powf(1.0 / a),
            move |x: f64| a * x.max(0.0).powf(a - 1.0),
        )
    }

    /// `x ↦ sin²(πx/2)` on `[0, 1]`; conjugates the full tent map onto the
    /// logistic map `4y(1 − y)`.
    pub fn sin_squared() -> Self {
        Self::from_fns(
            "sin_squared",
            Interval::UNIT,
            |x: f64| (0.5 * PI * x).sin().powi(2),
            |y: f64| 2.0 / PI * y.clamp(0.0, 1.0).sqrt().asin(),
            |x: f64| 0.5 * PI * (PI * x).sin(),
        )
    }

    /// Piecewise linear interpolation through `(x, y)` knots.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self, HomeoError> {
        if knots.len() < 2 || knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(HomeoError::BadKnots);
        }
        let up = knots[1].1 > knots[0].1;
        if knots.windows(2).any(|w| (w[1].1 > w[0].1) != up || w[1].1 == w[0].1) {
            return Err(HomeoError::BadKnots);
        }
        let xs: Arc<Vec<(f64, f64)>> = Arc::new(knots.to_vec());
        let mut inv: Vec<(f64, f64)> = knots.iter().map(|&(x, y)| (y, x)).collect();
        if !up {
            inv.reverse();
        }
        let inv = Arc::new(inv);
        let domain = Interval::new(knots[0].0, knots[knots.len() - 1].0);
        let (f, df) = (xs.clone(), xs);
        Ok(Self::from_fns(
            "piecewise_linear",
            domain,
            move |x| lerp_table(&f, x).0,
            move |y| lerp_table(&inv, y).0,
            move |x| lerp_table(&df, x).1,
        ))
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// Checks strict monotonicity of `H` on the given sample (assumed sorted).
    pub fn check_monotone(&self, sample: &[f64]) -> Result<(), HomeoError> {
        for w in sample.windows(2) {
            let (a, b) = (self.apply(w[0]), self.apply(w[1]));
            let ok = if self.increasing { b > a } else { b < a };
            if !ok {
                return Err(HomeoError::NotMonotone { x: w[1] });
            }
        }
        Ok(())
    }
}

/// Linear interpolation in a sorted knot table; returns `(value, slope)`.
fn lerp_table(table: &[(f64, f64)], x: f64) -> (f64, f64) {
    let k = table.partition_point(|&(t, _)| t <= x).clamp(1, table.len() - 1);
    let (x0, y0) = table[k - 1];
    let (x1, y1) = table[k];
    let s = (y1 - y0) / (x1 - x0);
    (y0 + s * (x - x0), s)
}
