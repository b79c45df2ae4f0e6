use super::ladder::{ladder, LadderConfig};
use super::solver::apply_l;
use super::CohomologyError;
use crate::basis::{first_obstruction, BasisGrid, CoefficientTable, Obstruction};
use crate::map_model::PiecewiseMap;
use crate::observables::{p_variation, Observable};
use crate::transfer_operator::InvariantDensity;

/// `(|c_{i,q+1}(u₀)| + M·v_p(u₀)) / |c_{i,q}(u₀)|` at the first obstruction
/// `(i, q)` of `table`.
pub fn depth_bound(table: &CoefficientTable, threshold: f64, variation: f64, m: f64) -> Result<f64, CohomologyError> {
    match first_obstruction(table, threshold) {
        Obstruction::Constant => Err(CohomologyError::NoObstruction),
        Obstruction::At { row, level, value } => {
            if level + 1 > table.levels {
                return Err(CohomologyError::InsufficientLevels { needed: level + 1, available: table.levels });
            }
            Ok((table.get(row, level + 1).abs() + m * variation) / value.abs())
        }
    }
}

/// Checks `c_{i,q}(uₙ) = (−1)ⁿ c_{i,q}(u₀)` within `n·5/N` for every rung
/// and the telescoped identity
/// `m·c_{i,q}(u₀) = (−1)^m c_{i,q+1}(u_m) − c_{i,q+1}(u₀)` within
/// `(m+1)·5/N`.
pub fn alternating_coefficient_check(tables: &[CoefficientTable], row: usize, q: usize) -> bool {
    let Some(first) = tables.first() else {
        return false;
    };
    if q + 1 > first.levels {
        return false;
    }
    let slack = 5.0 / first.quadrature_n as f64;
    let c0 = first.get(row, q);
    let sign = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let alternating = tables.iter().enumerate().all(|(n, t)| (t.get(row, q) - sign(n) * c0).abs() <= n as f64 * slack);
    let m = tables.len() - 1;
    let lhs = m as f64 * c0;
    let rhs = sign(m) * tables[m].get(row, q + 1) - first.get(row, q + 1);
    alternating && (lhs - rhs).abs() < (m + 1) as f64 * slack
}

/// `v_{p,J}(𝓛u) ≥ v_{p,J}(u) − 1e-9`, with both variations taken over the
/// `n`-cell grid midpoints of the map's interval that lie in the witness
/// interval `J`.
pub fn horseshoe_variation_check(
    map: &PiecewiseMap,
    u: &Observable,
    p: f64,
    n: usize,
) -> Result<bool, CohomologyError> {
    let w = map.horseshoe.ok_or(CohomologyError::MissingWitness)?;
    let xs: Vec<f64> = map.interval.midpoints(n).into_iter().filter(|&x| w.j.contains_open(x)).collect();
    let before = p_variation(u, p, &xs)?.value;
    let after = p_variation(&apply_l(map, u), p, &xs)?.value;
    Ok(after >= before - 1e-9)
}

/// Runs the ladder with the given and a tighter solver configuration and
/// compares the rungs: same depth and `sup|uᵢ − uᵢ′| < 1e-5`.
pub fn uniqueness_check(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    u0: &Observable,
    cfg: &LadderConfig,
    basis: Option<&BasisGrid>,
) -> Result<bool, CohomologyError> {
    let a = ladder(map, h, u0, cfg, basis)?;
    let mut alt = *cfg;
    alt.solver.eps_tail = cfg.solver.eps_tail * 1e-3;
    alt.solver.j_max = cfg.solver.j_max * 2;
    let b = ladder(map, h, u0, &alt, basis)?;
    if a.depth != b.depth {
        return Ok(false);
    }
    Ok(a.chain.iter().zip(&b.chain).all(|(x, y)| x.sup_distance(y) < 1e-5))
}
