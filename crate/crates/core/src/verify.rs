//! Randomized invariant suites over a map and its density, reported as a
//! pass/fail table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{kernel_basis, BasisGrid};
use crate::cohomology::{apply_l, horseshoe_variation_check, neumann_solve, SolverConfig, Verdict};
use crate::grid::{GridFunction, Interpolation};
use crate::map_model::{transition_matrix, PiecewiseMap};
use crate::observables::{inner_product_grid, l1_hm, p_variation_values};
use crate::par;
use crate::random::{random_bv, random_bv_grid, random_trig};
use crate::transfer_operator::{density_for, perron_frobenius_at, InvariantDensity, NormalizedOperator, DENSITY_FLOOR};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub basis_levels: usize,
    pub n_max: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { trials: 100, seed: 0, basis_levels: 3, n_max: 19 }
    }
}

struct Recorder {
    out: Vec<CheckOutcome>,
}

impl Recorder {
    /// Records `worst ≤ tol` (use `NaN`-free inputs).
    fn le(&mut self, suite: &'static str, name: &'static str, worst: f64, tol: f64) {
        self.out.push(CheckOutcome { suite, name, passed: worst <= tol, worst, tolerance: tol });
    }
}

fn sup(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

/// Runs every suite applicable to `map`.
pub fn run_suites(map: &PiecewiseMap, h: &InvariantDensity, cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    let mut rec = Recorder { out: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    map_suite(&mut rec, map, &mut rng);
    transfer_suite(&mut rec, map, h, cfg, &mut rng);
    observable_suite(&mut rec, h, cfg, &mut rng);
    basis_and_cohomology_suite(&mut rec, map, h, cfg, &mut rng);
    rec.out
}

fn map_suite(rec: &mut Recorder, map: &PiecewiseMap, rng: &mut ChaCha8Rng) {
    let mut round_trip = 0.0f64;
    for _ in 0..1000 {
        let x = map.interval.lo + map.interval.width() * rng.gen::<f64>();
        let b = &map.branches[map.branch_index(x)];
        round_trip = round_trip.max((b.inverse(b.forward(x)) - x).abs());
    }
    rec.le("map_model", "inverse round trip", round_trip, 1e-10);
    let image_gap = sup(map.branches.iter().map(|b| {
        let ys: Vec<f64> = (0..1000).map(|k| b.forward(b.domain.lo + b.domain.width() * k as f64 / 999.0)).collect();
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - b.image.lo).abs().max((hi - b.image.hi).abs())
    }));
    rec.le("map_model", "branch images match samples", image_gap, 1e-9);
    let same = transition_matrix(map) == transition_matrix(map);
    rec.le("map_model", "transition matrix deterministic", if same { 0.0 } else { 1.0 }, 0.0);
}

fn transfer_suite(
    rec: &mut Recorder,
    map: &PiecewiseMap,
    h: &InvariantDensity,
    cfg: &VerifyConfig,
    rng: &mut ChaCha8Rng,
) {
    let n = h.n();
    let support = h.support();
    let slack = 5.0 / n as f64;
    let lebesgue = GridFunction::constant(support, n, 1.0);
    let xs = support.midpoints(n);
    let Ok(op) = NormalizedOperator::new(map, h, DENSITY_FLOOR) else {
        rec.le("transfer_operator", "density above floor on the core", f64::INFINITY, 0.0);
        return;
    };
    let (mut duality, mut adjoint, mut integral, mut pu) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.trials {
        let f = random_bv(rng, support);
        let g = random_bv(rng, support);
        let phi_f = par::map_slice(&xs, |&y| perron_frobenius_at(map, y, |x| f.eval(x)));
        let gs = g.sample(support, n).values;
        let f_s = f.sample(support, n).values;
        let gt: Vec<f64> = xs.iter().map(|&x| g.eval(map.apply(x))).collect();
        let lhs = inner_product_grid(&phi_f, &gs, &lebesgue);
        let rhs = inner_product_grid(&f_s, &gt, &lebesgue);
        duality = duality.max((lhs - rhs).abs());
        let ones = vec![1.0; n];
        integral = integral
            .max((inner_product_grid(&phi_f, &ones, &lebesgue) - inner_product_grid(&f_s, &ones, &lebesgue)).abs());
        let p_f = op.apply_fn(|x| f.eval(x), Interpolation::Nearest);
        adjoint = adjoint.max((inner_product_grid(&p_f.values, &gs, &h.h) - inner_product_grid(&f_s, &gt, &h.h)).abs());
        let w = random_bv_grid(rng, support, n);
        let puw = op.apply_fn(|y| w.eval(map.apply(y)), Interpolation::Nearest);
        pu = pu.max(l1_hm(&puw.axpby(1.0, &w, -1.0).values, &h.h));
    }
    rec.le("transfer_operator", "duality", duality, slack);
    rec.le("transfer_operator", "adjointness", adjoint, slack);
    rec.le("transfer_operator", "integral preservation", integral, slack);
    rec.le("transfer_operator", "P∘U = id", pu, slack);
    if let Some(m) = &h.ulam {
        rec.le("transfer_operator", "fixed density residual", h.residual, 1e-8);
        if let Ok(fine) = density_for(map, 2 * m.n, 1e-12, 100_000) {
            let coarse: Vec<f64> = (0..2 * m.n).map(|k| h.h.values[k / 2]).collect();
            let d = l1_hm(
                &coarse.iter().zip(&fine.h.values).map(|(a, b)| a - b).collect::<Vec<_>>(),
                &GridFunction::constant(support, 2 * m.n, 1.0),
            );
            rec.le("transfer_operator", "Ulam consistency N vs 2N", d, 10.0 / n as f64);
        }
    }
}

fn observable_suite(rec: &mut Recorder, h: &InvariantDensity, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) {
    let support = h.support();
    let n = 256;
    let (mut triangle, mut homogeneity, mut monotone_p, mut sup_bound) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.trials {
        let f = random_bv_grid(rng, support, n);
        let g = random_bv_grid(rng, support, n);
        let c: f64 = rng.gen_range(-3.0..3.0);
        for p in [1.0, 2.0] {
            let vf = p_variation_values(&f.values, p).unwrap().0;
            let vg = p_variation_values(&g.values, p).unwrap().0;
            let vfg = p_variation_values(&f.axpby(1.0, &g, 1.0).values, p).unwrap().0;
            triangle = triangle.max(vfg - vf - vg);
            let vcf = p_variation_values(&f.map_values(|v| c * v).values, p).unwrap().0;
            homogeneity = homogeneity.max((vcf - c.abs() * vf).abs() / vf.max(1.0));
        }
        let vs: Vec<f64> = [1.0, 1.5, 2.0, 3.0].iter().map(|&p| p_variation_values(&f.values, p).unwrap().0).collect();
        monotone_p = monotone_p.max(sup(vs.windows(2).map(|w| w[1] - w[0])));
        let mean = f.values.iter().sum::<f64>() / n as f64;
        let z = f.map_values(|v| v - mean);
        sup_bound = sup_bound.max(z.sup_abs() - p_variation_values(&z.values, 2.0).unwrap().0);
    }
    rec.le("observables", "triangle inequality", triangle, 1e-12);
    rec.le("observables", "homogeneity", homogeneity, 1e-12);
    rec.le("observables", "non-increasing in p", monotone_p, 1e-12);
    rec.le("observables", "sup|f − mean| ≤ v_p", sup_bound, 1e-12);
}

fn basis_and_cohomology_suite(
    rec: &mut Recorder,
    map: &PiecewiseMap,
    h: &InvariantDensity,
    cfg: &VerifyConfig,
    rng: &mut ChaCha8Rng,
) {
    let n = h.n();
    let support = h.support();
    let slack = 5.0 / n as f64;
    if let Ok(basis) = kernel_basis(map, h, cfg.n_max, 8, 6) {
        let grid = BasisGrid::new(&basis, map, h, cfg.basis_levels);
        let mut ortho = 0.0f64;
        let flat: Vec<&Vec<f64>> = grid.values.iter().flat_map(|r| r.iter()).collect();
        for (a, va) in flat.iter().enumerate() {
            for (b, vb) in flat.iter().enumerate().skip(a) {
                let ip = inner_product_grid(va, vb, &h.h);
                ortho = ortho.max((ip - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        rec.le("basis", "orthonormality across levels", ortho, 1e-6);
        rec.le("basis", "kernel membership", sup(basis.iter().map(|b| b.kernel_residual)), 1e-7);
        let (mut bessel, mut ucoef) = (0.0f64, 0.0f64);
        for _ in 0..cfg.trials.min(50) {
            let u = random_bv(rng, support);
            let us = u.sample(support, n);
            let t = grid.table(&us.values);
            let energy: f64 = t.entries.iter().flatten().map(|c| c * c).sum();
            bessel = bessel.max(energy - inner_product_grid(&us.values, &us.values, &h.h));
            let l = apply_l(map, &u).sample(support, n);
            let tl = grid.table(&l.values);
            ucoef = ucoef.max(sup((0..t.entries.len()).map(|i| (tl.get(i, 0) + t.get(i, 0)).abs())));
        }
        rec.le("basis", "Bessel inequality", bessel, 1e-6);
        rec.le("cohomology", "c_{i,0}(𝓛ρ) = −c_{i,0}(ρ)", ucoef, slack);
    }
    let solver = SolverConfig::default();
    let mut mean_gap = 0.0f64;
    let ones = vec![1.0; n];
    for _ in 0..cfg.trials.min(20) {
        let u = apply_l(map, &random_trig(rng, 4));
        if let Ok(r) = neumann_solve(map, h, &u, &solver) {
            if r.verdict == Verdict::Coboundary {
                let ug = u.sample(support, n);
                mean_gap = mean_gap.max(inner_product_grid(&ug.values, &ones, &h.h).abs());
            }
        }
    }
    rec.le("cohomology", "coboundaries have zero mean", mean_gap, 1e-6);
    if map.horseshoe.is_some() {
        let mut bad = 0usize;
        for _ in 0..cfg.trials {
            let u = random_bv(rng, support);
            for p in [1.0, 2.0] {
                if !horseshoe_variation_check(map, &u, p, n.min(1024)).unwrap_or(false) {
                    bad += 1;
                }
            }
        }
        rec.le("cohomology", "horseshoe variation growth", bad as f64, 0.0);
    }
}
