use serde::{Deserialize, Serialize};

use super::solver::{iterated_l_at, neumann_solve, SolveReport, SolverConfig, Verdict};
use super::CohomologyError;
use crate::basis::{first_obstruction, BasisGrid, CoefficientTable, Obstruction};
use crate::grid::GridFunction;
use crate::map_model::{covering_for, Covering, PiecewiseMap};
use crate::observables::{l1_hm, p_variation_on, Observable};
use crate::par;
use crate::transfer_operator::InvariantDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub solver: SolverConfig,
    /// Exponent of the variation traces.
    pub p: f64,
    /// Hard cap on the number of rungs attempted.
    pub max_depth: usize,
    /// Obstruction threshold for the coefficient tables.
    pub threshold: f64,
    /// Oscillation below which `u₀` counts as constant when no basis is
    /// supplied.
    pub constant_tol: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { solver: SolverConfig::default(), p: 1.0, max_depth: 16, threshold: 1e-5, constant_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    Finite(usize),
    Constant,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderResult {
    pub depth: Depth,
    /// `u₀, u₁, …, u_m` on the density grid.
    #[serde(skip)]
    pub chain: Vec<GridFunction>,
    pub rung_reports: Vec<SolveReport>,
    pub variation_trace: Vec<f64>,
    pub sup_trace: Vec<f64>,
    /// `‖𝓛ⁱuᵢ − u₀‖_{L¹(hm)}` for `i = 0…m`.
    pub composition_residuals: Vec<f64>,
    pub obstruction: Option<Obstruction>,
    pub bound: Option<f64>,
    /// Covering data used for the bound constant, if any.
    pub covering: Option<Covering>,
    pub tables: Vec<CoefficientTable>,
    pub caveat: Option<String>,
    pub p: f64,
}

impl LadderResult {
    pub fn depth_value(&self) -> Option<usize> {
        match self.depth {
            Depth::Finite(m) => Some(m),
            Depth::Constant => None,
        }
    }
}

/// Rung `n + 1` solves `𝓛v = uₙ` and sets `u_{n+1} = v − ∫v h dm`; the
/// ladder stops at the first rung that is not a coboundary.
pub fn ladder(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    u0: &Observable,
    cfg: &LadderConfig,
    basis: Option<&BasisGrid>,
) -> Result<LadderResult, CohomologyError> {
    let (support, n) = (h.support(), h.n());
    let g0 = u0.sample(support, n);
    let table0 = basis.map(|b| b.table(&g0.values));
    let obstruction = table0.as_ref().map(|t| first_obstruction(t, cfg.threshold));
    let is_constant = match obstruction {
        Some(o) => o == Obstruction::Constant,
        None => {
            let core_vals: Vec<f64> =
                g0.values.iter().zip(g0.midpoints()).filter(|(_, x)| map.core.contains(*x)).map(|(v, _)| *v).collect();
            let hi = core_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = core_vals.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo < cfg.constant_tol
        }
    };
    let mut result = LadderResult {
        depth: Depth::Constant,
        chain: Vec::new(),
        rung_reports: Vec::new(),
        variation_trace: Vec::new(),
        sup_trace: Vec::new(),
        composition_residuals: Vec::new(),
        obstruction,
        bound: None,
        covering: None,
        tables: Vec::new(),
        caveat: None,
        p: cfg.p,
    };
    if is_constant {
        return Ok(result);
    }

    let mut chain = vec![g0];
    let mut current = u0.clone();
    loop {
        if chain.len() > cfg.max_depth {
            result.caveat = Some(format!("stopped at the depth cap {}", cfg.max_depth));
            break;
        }
        match neumann_solve(map, h, &current, &cfg.solver) {
            Ok(report) => {
                let verdict = report.verdict;
                let next = report.solution.clone();
                result.rung_reports.push(report);
                match (verdict, next) {
                    (Verdict::Coboundary, Some(v)) => {
                        if v.sup_abs() < cfg.solver.eps_res {
                            result.caveat = Some("rung solution vanished".into());
                            break;
                        }
                        current = Observable::Sampled(v.clone());
                        chain.push(v);
                    }
                    (Verdict::Inconclusive, _) => {
                        result.caveat = Some("inconclusive rung".into());
                        break;
                    }
                    _ => break,
                }
            }
            Err(CohomologyError::MeanNotZero { mean }) => {
                result.rung_reports.push(SolveReport {
                    solution: None,
                    residual: mean.abs(),
                    terms_used: 0,
                    tail_norm: 0.0,
                    verdict: Verdict::NotCoboundary,
                    lambda: cfg.solver.lambda,
                    input_mean: mean,
                });
                break;
            }
            Err(CohomologyError::NoConvergence { report }) => {
                let mut report = *report;
                report.verdict = Verdict::Inconclusive;
                result.rung_reports.push(report);
                result.caveat = Some("Neumann series did not converge".into());
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let m = chain.len() - 1;
    result.depth = Depth::Finite(m);
    for g in &chain {
        let core_vals = p_variation_on(g, cfg.p, Some(map.core))?;
        result.variation_trace.push(core_vals.value);
        result.sup_trace.push(g.sup_abs());
    }
    let xs = chain[0].midpoints();
    for (i, g) in chain.iter().enumerate() {
        let diff = par::map_range(xs.len(), |k| iterated_l_at(map, |y| g.eval(y), i, xs[k]) - chain[0].values[k]);
        result.composition_residuals.push(l1_hm(&diff, &h.h));
    }
    if let Some(b) = basis {
        result.tables = chain.iter().map(|g| b.table(&g.values)).collect();
        if let Some(Obstruction::At { row, .. }) = obstruction {
            let covering = map.covering.or_else(|| map.horseshoe.and_then(|w| covering_for(map, w.j, 32)));
            let c = match covering {
                Some(cv) => (cv.k as f64) * 2f64.powi(cv.j as i32),
                None => {
                    result.caveat.get_or_insert_with(|| "bound uses the default covering constant".into());
                    (map.branches.len() as f64).max(2.0)
                }
            };
            result.covering = covering;
            let sup_phi = b.values[row][0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let m_const = sup_phi * h.b * c;
            result.bound =
                super::checks::depth_bound(&result.tables[0], cfg.threshold, result.variation_trace[0], m_const).ok();
        }
    }
    result.chain = chain;
    Ok(result)
}
