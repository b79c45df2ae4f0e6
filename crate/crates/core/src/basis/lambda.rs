use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::BasisError;
use crate::grid::{GridFunction, Interval};
use crate::map_model::PiecewiseMap;
use crate::observables::{l1_hm, Observable};
use crate::par;
use crate::transfer_operator::{perron_frobenius_at, InvariantDensity};

/// `[a/2^d, (a+1)/2^d]`, rescaled to the map's interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicInterval {
    pub numerator: u64,
    pub depth: u32,
}

impl DyadicInterval {
    pub fn on(&self, support: &Interval) -> Interval {
        let scale = support.width() / (1u64 << self.depth) as f64;
        Interval::new(support.lo + scale * self.numerator as f64, support.lo + scale * (self.numerator + 1) as f64)
    }
}

/// Kernel element of `P` supported on two intervals with a common image:
/// `1` on `Ĩ₂`, `−|T′(x)|/|T′(σ₂Tx)|·h(σ₂Tx)/h(x)` on `Ĩ₁`, `0` elsewhere.
#[derive(Clone)]
pub struct LambdaFunction {
    pub i1_tilde: Interval,
    pub i2_tilde: Interval,
    pub i2_dyadic: DyadicInterval,
    pub branch1: usize,
    /// Branch whose inverse is `σ₂`.
    pub sigma2_branch: usize,
    /// `T(Ĩ₂) = T(Ĩ₁)`.
    pub image: Interval,
    /// `‖Φ(φh)‖_{L¹(m)}` on the density grid.
    pub kernel_residual: f64,
    map: Arc<PiecewiseMap>,
    h: Arc<GridFunction>,
}

impl fmt::Debug for LambdaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LambdaFunction")
            .field("i1_tilde", &self.i1_tilde)
            .field("i2_tilde", &self.i2_tilde)
            .field("branch1", &self.branch1)
            .field("sigma2_branch", &self.sigma2_branch)
            .field("kernel_residual", &self.kernel_residual)
            .finish()
    }
}

impl LambdaFunction {
    /// The ratio term on `Ĩ₁`.
    pub fn ratio(&self, x: f64) -> f64 {
        let b1 = &self.map.branches[self.branch1];
        let b2 = &self.map.branches[self.sigma2_branch];
        let y = b2.inverse(b1.forward(x));
        -b1.derivative(x).abs() / b2.derivative(y).abs() * self.h.eval(y) / self.h.eval(x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.i2_tilde.contains(x) {
            1.0
        } else if self.i1_tilde.contains(x) {
            self.ratio(x)
        } else {
            0.0
        }
    }

    pub fn to_observable(&self) -> Observable {
        let me = self.clone();
        let label = format!(
            "lambda[{}/2^{} | {}→{}]",
            self.i2_dyadic.numerator, self.i2_dyadic.depth, self.sigma2_branch, self.branch1
        );
        Observable::function(label, false, move |x| me.eval(x))
    }

    fn kernel_residual_on(&self, h: &GridFunction) -> f64 {
        let xs = h.midpoints();
        let vals = par::map_slice(&xs, |&y| perron_frobenius_at(&self.map, y, |x| self.eval(x) * h.eval(x)));
        let ones = vec![1.0; h.n()];
        let lebesgue = GridFunction::new(h.support, ones, h.interpolation);
        l1_hm(&vals, &lebesgue)
    }
}

/// Enumerates Λ-functions by increasing dyadic depth of `Ĩ₂` (up to
/// `max_depth`), then left to right, then by the index of the partner
/// branch, stopping after `budget` functions.
pub fn lambda_family(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    budget: usize,
    max_depth: u32,
) -> Result<Vec<LambdaFunction>, BasisError> {
    const TOL: f64 = 1e-12;
    if map.branches.len() < 2 {
        return Err(BasisError::EmptyFamily { depth: max_depth });
    }
    let shared_map = Arc::new(map.clone());
    let shared_h = Arc::new(h.h.clone());
    let support = map.interval;
    let mut out = Vec::new();
    for depth in 1..=max_depth {
        for a in 0..(1u64 << depth) {
            let dy = DyadicInterval { numerator: a, depth };
            let i2 = dy.on(&support);
            if !map.core.contains_interval(&i2, TOL) {
                continue;
            }
            let Some(b2) = map.branches.iter().position(|b| b.domain.contains_interval(&i2, 0.0)) else {
                continue;
            };
            let image = map.branches[b2].image_of(&i2);
            for (b1, br) in map.branches.iter().enumerate() {
                if b1 == b2 || !br.image.contains_interval(&image, TOL) {
                    continue;
                }
                let i1 = br.preimage_of(&image);
                if !map.core.contains_interval(&i1, TOL) {
                    continue;
                }
                let mut f = LambdaFunction {
                    i1_tilde: i1,
                    i2_tilde: i2,
                    i2_dyadic: dy,
                    branch1: b1,
                    sigma2_branch: b2,
                    image,
                    kernel_residual: f64::NAN,
                    map: shared_map.clone(),
                    h: shared_h.clone(),
                };
                f.kernel_residual = f.kernel_residual_on(&h.h);
                out.push(f);
                if out.len() == budget {
                    return Ok(out);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(BasisError::EmptyFamily { depth: max_depth });
    }
    Ok(out)
}
