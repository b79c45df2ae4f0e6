//! Observables: analytic closures and grid samples, their `p`-variation,
//! inner products against an invariant density, and transport through
//! homeomorphisms.

mod variation;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use variation::{p_variation, p_variation_on, p_variation_values, PVariationResult};

use crate::grid::{GridFunction, Interpolation, Interval};
use crate::homeo::Homeomorphism;
use crate::transfer_operator::InvariantDensity;

pub(crate) type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("p-variation needs p ≥ 1, got {p}")]
    InvalidP { p: f64 },
    #[error("sampled operands have different resolutions ({left} vs {right})")]
    ResolutionMismatch { left: usize, right: usize },
    #[error("transport map is not monotone near x = {x}")]
    NotMonotone { x: f64 },
    #[error("invalid observable: {0}")]
    Invalid(String),
}

impl ObservableError {
    pub fn code(&self) -> &'static str {
        match self {
            ObservableError::InvalidP { .. } => "observables::InvalidP",
            ObservableError::ResolutionMismatch { .. } => "observables::ResolutionMismatch",
            ObservableError::NotMonotone { .. } => "observables::NotMonotone",
            ObservableError::Invalid(_) => "observables::Invalid",
        }
    }
}

/// `a·cos(2πnx) + b·sin(2πnx)`; `n` may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub n: f64,
    pub cos: f64,
    pub sin: f64,
}

/// A real function on an interval.
#[derive(Clone)]
pub enum Observable {
    Constant(f64),
    /// `offset + Σ terms`.
    Fourier {
        offset: f64,
        terms: Vec<FourierTerm>,
    },
    /// `values[k]` on `[breakpoints[k-1], breakpoints[k])`, with
    /// `values.len() == breakpoints.len() + 1`.
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear interpolation through knots, constant beyond the ends.
    Linear {
        knots: Vec<(f64, f64)>,
    },
    Sampled(GridFunction),
    /// `outer ∘ inner`.
    Compose {
        outer: Arc<Observable>,
        inner: RealFn,
        inner_smooth: bool,
        label: String,
    },
    /// `Σ cᵢ·uᵢ`.
    Combination(Vec<(f64, Observable)>),
    Function {
        f: RealFn,
        smooth: bool,
        label: String,
    },
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::Fourier { offset, terms } => {
                f.debug_struct("Fourier").field("offset", offset).field("terms", terms).finish()
            }
            Observable::Step { breakpoints, values } => {
                f.debug_struct("Step").field("breakpoints", breakpoints).field("values", values).finish()
            }
            Observable::Linear { knots } => f.debug_struct("Linear").field("knots", knots).finish(),
            Observable::Sampled(g) => write!(f, "Sampled(N={}, {:?})", g.n(), g.interpolation),
            Observable::Compose { outer, label, .. } => write!(f, "({outer:?}) ∘ {label}"),
            Observable::Combination(parts) => f.debug_list().entries(parts).finish(),
            Observable::Function { label, .. } => write!(f, "Function({label})"),
        }
    }
}

impl Observable {
    pub fn cos(n: f64, amplitude: f64) -> Self {
        Observable::Fourier { offset: 0.0, terms: vec![FourierTerm { n, cos: amplitude, sin: 0.0 }] }
    }

    pub fn sin(n: f64, amplitude: f64) -> Self {
        Observable::Fourier { offset: 0.0, terms: vec![FourierTerm { n, cos: 0.0, sin: amplitude }] }
    }

    /// Indicator of `[lo, hi)`.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Observable::Step { breakpoints: vec![lo, hi], values: vec![0.0, 1.0, 0.0] }
    }

    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ObservableError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(ObservableError::Invalid(format!(
                "step needs one more value than breakpoints ({} vs {})",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ObservableError::Invalid("step breakpoints must increase".into()));
        }
        Ok(Observable::Step { breakpoints, values })
    }

    pub fn linear(knots: Vec<(f64, f64)>) -> Result<Self, ObservableError> {
        if knots.is_empty() || knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ObservableError::Invalid("linear knots must be non-empty with increasing x".into()));
        }
        Ok(Observable::Linear { knots })
    }

    pub fn function(label: impl Into<String>, smooth: bool, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Observable::Function { f: Arc::new(f), smooth, label: label.into() }
    }

    pub fn compose(self, label: impl Into<String>, smooth: bool, inner: RealFn) -> Self {
        Observable::Compose { outer: Arc::new(self), inner, inner_smooth: smooth, label: label.into() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::Fourier { offset, terms } => terms.iter().fold(*offset, |acc, t| {
                let a = 2.0 * PI * t.n * x;
                let mut v = acc;
                if t.cos != 0.0 {
                    v += t.cos * a.cos();
                }
                if t.sin != 0.0 {
                    v += t.sin * a.sin();
                }
                v
            }),
            Observable::Step { breakpoints, values } => values[breakpoints.partition_point(|&b| b <= x)],
            Observable::Linear { knots } => {
                let k = knots.partition_point(|&(t, _)| t <= x);
                if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let ((x0, y0), (x1, y1)) = (knots[k - 1], knots[k]);
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
            Observable::Sampled(g) => g.eval(x),
            Observable::Compose { outer, inner, .. } => outer.eval(inner(x)),
            Observable::Combination(parts) => parts.iter().map(|(c, u)| c * u.eval(x)).sum(),
            Observable::Function { f, .. } => f(x),
        }
    }

    /// Whether grid samples of this observable should be interpolated
    /// smoothly.
    pub fn is_smooth(&self) -> bool {
        match self {
            Observable::Constant(_) | Observable::Fourier { .. } | Observable::Linear { .. } => true,
            Observable::Step { .. } => false,
            Observable::Sampled(g) => g.interpolation == Interpolation::Cubic,
            Observable::Compose { outer, inner_smooth, .. } => *inner_smooth && outer.is_smooth(),
            Observable::Combination(parts) => parts.iter().all(|(_, u)| u.is_smooth()),
            Observable::Function { smooth, .. } => *smooth,
        }
    }

    pub fn preferred_interpolation(&self) -> Interpolation {
        if self.is_smooth() {
            Interpolation::Cubic
        } else {
            Interpolation::Nearest
        }
    }

    /// Jump locations known analytically.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Observable::Step { breakpoints, .. } => breakpoints.clone(),
            Observable::Combination(parts) => {
                let mut all: Vec<f64> = parts.iter().flat_map(|(_, u)| u.breakpoints()).collect();
                all.sort_by(f64::total_cmp);
                all.dedup();
                all
            }
            _ => Vec::new(),
        }
    }

    /// Samples at the `n` midpoints of `support`. A sampled observable on
    /// the same grid is returned unchanged.
    pub fn sample(&self, support: Interval, n: usize) -> GridFunction {
        if let Observable::Sampled(g) = self {
            if g.n() == n && g.support == support {
                return g.clone();
            }
        }
        GridFunction::from_fn(support, n, self.preferred_interpolation(), |x| self.eval(x))
    }

    /// Points used for the `p`-variation of this observable on `support`:
    /// the grid midpoints plus the known jump points inside the support.
    pub fn variation_sample(&self, support: Interval, n: usize) -> Vec<f64> {
        let mut pts = support.midpoints(n);
        pts.extend(self.breakpoints().into_iter().filter(|&b| support.contains(b)));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn scale(self, c: f64) -> Observable {
        Observable::Combination(vec![(c, self)])
    }

    pub fn plus(self, c: f64, other: Observable) -> Observable {
        Observable::Combination(vec![(1.0, self), (c, other)])
    }

    /// Sampled value resolution, if this observable is a grid sample.
    pub fn resolution(&self) -> Option<usize> {
        match self {
            Observable::Sampled(g) => Some(g.n()),
            _ => None,
        }
    }
}

impl From<GridFunction> for Observable {
    fn from(g: GridFunction) -> Self {
        Observable::Sampled(g)
    }
}

/// `∫ u·w·h dm` by the midpoint rule at the density's resolution.
pub fn inner_product_hm(u: &Observable, w: &Observable, h: &InvariantDensity) -> Result<f64, ObservableError> {
    let n = h.h.n();
    for r in [u.resolution(), w.resolution()].into_iter().flatten() {
        if r != n {
            return Err(ObservableError::ResolutionMismatch { left: r, right: n });
        }
    }
    let us = u.sample(h.h.support, n);
    let ws = w.sample(h.h.support, n);
    Ok(inner_product_grid(&us.values, &ws.values, &h.h))
}

/// `∫ u·w·h dm` on already sampled values.
pub fn inner_product_grid(u: &[f64], w: &[f64], h: &GridFunction) -> f64 {
    let n = h.n();
    debug_assert!(u.len() == n && w.len() == n);
    let mut s = 0.0;
    for k in 0..n {
        s += u[k] * w[k] * h.values[k];
    }
    s * h.support.width() / n as f64
}

/// `∫ |u| h dm` on sampled values.
pub fn l1_hm(u: &[f64], h: &GridFunction) -> f64 {
    let n = h.n();
    let s: f64 = u[..n].iter().zip(&h.values).map(|(a, w)| a.abs() * w).sum();
    s * h.support.width() / n as f64
}

/// `∫ u h dm`.
pub fn mean_hm(u: &Observable, h: &InvariantDensity) -> Result<f64, ObservableError> {
    inner_product_hm(u, &Observable::Constant(1.0), h)
}

/// `u − ∫ u h dm`.
pub fn normalize_mean(u: &Observable, h: &InvariantDensity) -> Result<Observable, ObservableError> {
    let m = mean_hm(u, h)?;
    Ok(match u {
        Observable::Sampled(g) => Observable::Sampled(g.map_values(|v| v - m)),
        _ => u.clone().plus(-m, Observable::Constant(1.0)),
    })
}

/// The observable `x ↦ u(H(x))`. Grid samples are re-sampled through `H` at
/// the same resolution on `H⁻¹` of their support.
pub fn transport(u: &Observable, h: &Homeomorphism) -> Result<Observable, ObservableError> {
    match u {
        Observable::Sampled(g) => {
            let support = Interval::hull(h.inverse(g.support.lo), h.inverse(g.support.hi));
            let xs = support.midpoints(g.n());
            h.check_monotone(&xs).map_err(|e| match e {
                crate::homeo::HomeoError::NotMonotone { x } => ObservableError::NotMonotone { x },
                other => ObservableError::Invalid(other.to_string()),
            })?;
            let values = crate::par::map_slice(&xs, |&x| g.eval(h.apply(x)));
            Ok(Observable::Sampled(GridFunction::new(support, values, g.interpolation)))
        }
        Observable::Constant(c) => Ok(Observable::Constant(*c)),
        _ => {
            let hh = h.clone();
            Ok(u.clone().compose(h.label.clone(), true, Arc::new(move |x| hh.apply(x))))
        }
    }
}
