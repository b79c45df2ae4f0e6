use std::fmt;
use std::sync::Arc;

use crate::grid::Interval;

pub(crate) type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a branch evaluates.
#[derive(Clone)]
pub enum BranchLaw {
    /// `x ↦ slope·x + offset`; inverse in closed form.
    Affine { slope: f64, offset: f64 },
    /// General monotone law; the inverse is either supplied or found by
    /// monotone bisection.
    Smooth { forward: RealFn, derivative: RealFn, inverse: Option<RealFn> },
}

impl fmt::Debug for BranchLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchLaw::Affine { slope, offset } => {
                f.debug_struct("Affine").field("slope", slope).field("offset", offset).finish()
            }
            BranchLaw::Smooth { inverse, .. } => {
                f.debug_struct("Smooth").field("closed_form_inverse", &inverse.is_some()).finish()
            }
        }
    }
}

/// One monotone piece of a piecewise monotone map.
///
/// The domain is treated as half-open `[lo, hi)`, except for the rightmost
/// branch of a map, which also owns the right endpoint of the ambient
/// interval.
#[derive(Debug, Clone)]
pub struct Branch {
    pub domain: Interval,
    pub law: BranchLaw,
    /// `[min, max]` of the continuous extension of the branch to the closed
    /// domain, from endpoint evaluation.
    pub image: Interval,
    pub increasing: bool,
}

impl Branch {
    pub fn affine(domain: Interval, slope: f64, offset: f64) -> Self {
        let (a, b) = (slope * domain.lo + offset, slope * domain.hi + offset);
        Branch {
            domain,
            law: BranchLaw::Affine { slope, offset },
            image: Interval::hull(a, b),
            increasing: slope > 0.0,
        }
    }

    /// Affine branch given by the images of its two endpoints.
    pub fn affine_onto(domain: Interval, at_lo: f64, at_hi: f64) -> Self {
        let slope = (at_hi - at_lo) / domain.width();
        let mut b = Branch::affine(domain, slope, at_lo - slope * domain.lo);
        b.image = Interval::hull(at_lo, at_hi);
        b
    }

    pub fn smooth(domain: Interval, forward: RealFn, derivative: RealFn, inverse: Option<RealFn>) -> Self {
        let (a, b) = (forward(domain.lo), forward(domain.hi));
        Branch {
            domain,
            law: BranchLaw::Smooth { forward, derivative, inverse },
            image: Interval::hull(a, b),
            increasing: b > a,
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        match &self.law {
            BranchLaw::Affine { slope, offset } => slope * x + offset,
            BranchLaw::Smooth { forward, .. } => forward(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.law {
            BranchLaw::Affine { slope, .. } => *slope,
            BranchLaw::Smooth { derivative, .. } => derivative(x),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.law, BranchLaw::Affine { .. })
    }

    /// The inverse branch `σ: image → domain`. Points outside the image are
    /// clamped to it.
    pub fn inverse(&self, y: f64) -> f64 {
        let y = y.clamp(self.image.lo, self.image.hi);
        match &self.law {
            BranchLaw::Affine { slope, offset } => ((y - offset) / slope).clamp(self.domain.lo, self.domain.hi),
            BranchLaw::Smooth { inverse: Some(inv), .. } => inv(y).clamp(self.domain.lo, self.domain.hi),
            BranchLaw::Smooth { forward, .. } => self.bisect(forward.as_ref(), y),
        }
    }

    // Runs until the bracket cannot shrink any further in f64.
    fn bisect(&self, f: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> f64 {
        let (mut lo, mut hi) = (self.domain.lo, self.domain.hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = f(mid) < y;
            if below == self.increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Image of a sub-interval of the domain.
    pub fn image_of(&self, sub: &Interval) -> Interval {
        Interval::hull(self.forward(sub.lo), self.forward(sub.hi))
    }

    /// Preimage (inside this branch) of a sub-interval of the image.
    pub fn preimage_of(&self, sub: &Interval) -> Interval {
        Interval::hull(self.inverse(sub.lo), self.inverse(sub.hi))
    }
}
