//! Seeded generators of random bounded-variation test functions.

use rand::Rng;

use crate::grid::{GridFunction, Interval};
use crate::observables::{FourierTerm, Observable};

/// Step function on `support` with between one and `max_jumps` jumps at
/// uniform positions and values uniform in `[-1, 1]`.
pub fn random_step<R: Rng>(rng: &mut R, support: Interval, max_jumps: usize) -> Observable {
    let jumps = rng.gen_range(1..=max_jumps.max(1));
    let mut breakpoints: Vec<f64> = (0..jumps).map(|_| support.lo + support.width() * rng.gen::<f64>()).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let values = (0..=breakpoints.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Observable::Step { breakpoints, values }
}

/// Random trigonometric polynomial of degree at most `degree` on `[0, 1]`
/// with coefficients uniform in `[-1, 1]/n`.
pub fn random_trig<R: Rng>(rng: &mut R, degree: usize) -> Observable {
    let terms = (1..=degree)
        .map(|n| FourierTerm {
            n: n as f64,
            cos: rng.gen_range(-1.0..=1.0) / n as f64,
            sin: rng.gen_range(-1.0..=1.0) / n as f64,
        })
        .collect();
    Observable::Fourier { offset: rng.gen_range(-1.0..=1.0), terms }
}

/// Sum of a step function with at most three jumps of size at most ½ and a
/// low-frequency Fourier part; total variation stays below about 3.
pub fn random_bv<R: Rng>(rng: &mut R, support: Interval) -> Observable {
    let jumps = rng.gen_range(1..=3);
    let mut breakpoints: Vec<f64> = (0..jumps).map(|_| support.lo + support.width() * rng.gen::<f64>()).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let values = (0..=breakpoints.len()).map(|_| rng.gen_range(-0.25..=0.25)).collect();
    let step = Observable::Step { breakpoints, values };
    let k = 2.0 * std::f64::consts::PI / support.width();
    let (a1, b1, a2) = (rng.gen_range(-0.2..=0.2), rng.gen_range(-0.2..=0.2), rng.gen_range(-0.1..=0.1));
    let c = rng.gen_range(-1.0..=1.0);
    let lo = support.lo;
    let smooth = Observable::function("low-frequency", true, move |x| {
        let t = k * (x - lo);
        c + a1 * t.cos() + b1 * t.sin() + a2 * (2.0 * t).cos()
    });
    step.plus(1.0, smooth)
}

/// [`random_bv`] sampled on `n` midpoints with nearest-cell lookup.
pub fn random_bv_grid<R: Rng>(rng: &mut R, support: Interval, n: usize) -> GridFunction {
    random_bv(rng, support).sample(support, n).with_interpolation(Default::default())
}

/// `n` values on the dyadic lattice `k/1024` in `[-1, 1]`, so sums of
/// differences are exact in floating point.
pub fn dyadic_values<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1024i32..=1024) as f64 / 1024.0).collect()
}
