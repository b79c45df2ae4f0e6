use std::sync::Arc;

use serde::Serialize;

use super::ladder::{Depth, LadderResult};
use super::solver::iterated_l_at;
use super::CohomologyError;
use crate::homeo::Homeomorphism;
use crate::map_model::PiecewiseMap;
use crate::observables::{p_variation_values, Observable};
use crate::transfer_operator::InvariantDensity;

/// Pointwise tolerance of the semiconjugacy check.
const CONJUGACY_TOL: f64 = 1e-9;

/// A ladder carried from `T̃` to `T = H∘T̃∘H⁻¹`.
#[derive(Debug, Clone, Serialize)]
pub struct TransportedLadder {
    pub depth: Depth,
    #[serde(skip)]
    pub chain: Vec<Observable>,
    /// `H` of the source grid midpoints.
    #[serde(skip)]
    pub sample: Vec<f64>,
    /// `uᵢ` at `sample`; identical to the source rung values.
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
    pub variation_trace: Vec<f64>,
    /// `‖𝓛_Tⁱuᵢ − u₀‖` in `L¹` of the pushed-forward measure.
    pub composition_residuals: Vec<f64>,
    pub conjugacy_failures: usize,
}

/// Transports the chain of `source` (a ladder for `tilde`) through `H`,
/// checks `H∘T̃ = T∘H` on the grid and re-verifies the ladder identities
/// for `target`.
pub fn transport_ladder(
    h: &Homeomorphism,
    source: &LadderResult,
    tilde: &PiecewiseMap,
    target: &PiecewiseMap,
    density: &InvariantDensity,
) -> Result<TransportedLadder, CohomologyError> {
    let xs = density.support().midpoints(density.n());
    let total = xs.len();
    let failures =
        xs.iter().filter(|&&x| (h.apply(tilde.apply(x)) - target.apply(h.apply(x))).abs() > CONJUGACY_TOL).count();
    if failures * 1000 > total {
        return Err(CohomologyError::ConjugacyViolation { failures, total });
    }
    let sample: Vec<f64> = xs.iter().map(|&x| h.apply(x)).collect();
    let values: Vec<Vec<f64>> = source.chain.iter().map(|g| g.values.clone()).collect();
    let chain: Vec<Observable> = source
        .chain
        .iter()
        .map(|g| {
            let hh = h.clone();
            Observable::Sampled(g.clone()).compose(format!("{}⁻¹", h.label), true, Arc::new(move |y| hh.inverse(y)))
        })
        .collect();
    // H may reverse orientation; variation is taken along increasing sample
    let variation_trace = values
        .iter()
        .map(|v| {
            let ordered: Vec<f64> = if h.increasing { v.clone() } else { v.iter().rev().copied().collect() };
            p_variation_values(&ordered, source.p).map(|r| r.0)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let weight = density.support().width() / total as f64;
    let composition_residuals = chain
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut s = 0.0;
            for (k, &y) in sample.iter().enumerate() {
                let d = iterated_l_at(target, |z| u.eval(z), i, y) - values[0][k];
                s += d.abs() * density.h.values[k];
            }
            s * weight
        })
        .collect();
    Ok(TransportedLadder {
        depth: source.depth,
        chain,
        sample,
        values,
        variation_trace,
        composition_residuals,
        conjugacy_failures: failures,
    })
}
