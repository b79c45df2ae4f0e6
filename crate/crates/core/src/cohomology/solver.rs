use serde::{Deserialize, Serialize};

use super::CohomologyError;
use crate::grid::GridFunction;
use crate::map_model::PiecewiseMap;
use crate::observables::{inner_product_grid, l1_hm, Observable};
use crate::par;
use crate::transfer_operator::{koopman_apply, InvariantDensity, NormalizedOperator, DENSITY_FLOOR};

/// Tolerances of the Neumann solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub eps_tail: f64,
    pub eps_res: f64,
    pub j_max: usize,
    pub lambda: f64,
    /// Residuals in `[eps_res, inconclusive_factor·eps_res)` are reported
    /// as inconclusive rather than as a failure of the equation.
    pub inconclusive_factor: f64,
    pub density_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_tail: 1e-10,
            eps_res: 1e-6,
            j_max: 200,
            lambda: 1.0,
            inconclusive_factor: 10.0,
            density_floor: DENSITY_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Coboundary,
    NotCoboundary,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: Option<GridFunction>,
    /// `‖v∘T − λv − u‖_{L¹(hm)}`.
    pub residual: f64,
    pub terms_used: usize,
    /// `‖λ^{J−1} P^J u‖_{L¹(hm)}` for the last term `J`.
    pub tail_norm: f64,
    pub verdict: Verdict,
    pub lambda: f64,
    /// hm-mean of the input (removed before solving when `λ = 1`).
    pub input_mean: f64,
}

/// `𝓛v = v∘T − v`.
pub fn apply_l(map: &PiecewiseMap, v: &Observable) -> Observable {
    koopman_apply(map, v).plus(-1.0, v.clone())
}

/// `(𝓛ⁱf)(x) = Σ_r C(i,r)(−1)^{i−r} f(T^r x)` along the exact orbit of `x`.
pub fn iterated_l_at(map: &PiecewiseMap, f: impl Fn(f64) -> f64, i: usize, x: f64) -> f64 {
    let mut y = x;
    let mut binom = 1.0;
    let mut s = 0.0;
    for r in 0..=i {
        if r > 0 {
            y = map.apply(y);
            binom = binom * (i - r + 1) as f64 / r as f64;
        }
        let sign = if (i - r).is_multiple_of(2) { 1.0 } else { -1.0 };
        s += sign * binom * f(y);
    }
    s
}

/// Solves `v∘T − λv = u` with `v = Σ_{j≥1} λ^{j−1} P^j u`. The first term
/// is computed from `u` itself; later terms iterate `P` on the grid with
/// `u`'s preferred interpolation. The series stops at the first term whose
/// norm is below `eps_tail`; that term is included.
pub fn neumann_solve(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    u: &Observable,
    cfg: &SolverConfig,
) -> Result<SolveReport, CohomologyError> {
    let lambda = cfg.lambda;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CohomologyError::InvalidLambda(lambda));
    }
    let op = NormalizedOperator::new(map, h, cfg.density_floor)?;
    let (support, n) = (h.support(), h.n());
    let ones = vec![1.0; n];
    let u_grid = u.sample(support, n);
    let mean = inner_product_grid(&u_grid.values, &ones, &h.h);
    let untwisted = lambda == 1.0;
    if untwisted && mean.abs() > cfg.eps_res {
        return Err(CohomologyError::MeanNotZero { mean });
    }
    let shift = if untwisted { mean } else { 0.0 };
    let target = u_grid.map_values(|v| v - shift);

    let interp = u.preferred_interpolation();
    let mut term = op.apply_fn(|x| u.eval(x) - shift, interp);
    let mut v = term.clone();
    let mut tail = op.l1(&term);
    let mut j = 1;
    while tail >= cfg.eps_tail && j < cfg.j_max {
        term = op.apply(&term).map_values(|t| lambda * t);
        v = v.axpby(1.0, &term, 1.0);
        tail = op.l1(&term);
        j += 1;
    }
    if untwisted {
        let vm = inner_product_grid(&v.values, &ones, &h.h);
        v = v.map_values(|x| x - vm);
    }
    let residual = twisted_residual(map, h, &v, &target, lambda);
    let mut report = SolveReport {
        solution: Some(v),
        residual,
        terms_used: j,
        tail_norm: tail,
        verdict: Verdict::Inconclusive,
        lambda,
        input_mean: mean,
    };
    if tail >= cfg.eps_tail {
        return Err(CohomologyError::NoConvergence { report: Box::new(report) });
    }
    report.verdict = if !residual.is_finite() {
        Verdict::Inconclusive
    } else if residual < cfg.eps_res {
        Verdict::Coboundary
    } else if residual < cfg.inconclusive_factor * cfg.eps_res {
        Verdict::Inconclusive
    } else {
        Verdict::NotCoboundary
    };
    Ok(report)
}

/// `‖v∘T − λv − u‖_{L¹(hm)}` at the grid midpoints.
pub(crate) fn twisted_residual(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    v: &GridFunction,
    u: &GridFunction,
    lambda: f64,
) -> f64 {
    let xs = v.midpoints();
    let r = par::map_range(xs.len(), |k| v.eval(map.apply(xs[k])) - lambda * v.values[k] - u.values[k]);
    l1_hm(&r, &h.h)
}
