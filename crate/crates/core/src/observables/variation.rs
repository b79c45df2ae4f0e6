use serde::Serialize;

use super::{Observable, ObservableError};
use crate::grid::{GridFunction, Interval};

/// Maximal `p`-variation over subsequences of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PVariationResult {
    pub p: f64,
    pub value: f64,
    /// Points of the maximizing subsequence, in increasing order.
    pub witness: Vec<f64>,
}

/// `p`-variation of `f` over the ordered points `sample`.
pub fn p_variation(f: &Observable, p: f64, sample: &[f64]) -> Result<PVariationResult, ObservableError> {
    let values: Vec<f64> = sample.iter().map(|&x| f.eval(x)).collect();
    let (value, idx) = p_variation_values(&values, p)?;
    Ok(PVariationResult { p, value, witness: idx.into_iter().map(|i| sample[i]).collect() })
}

/// `p`-variation of a grid function over its midpoints lying in `j`
/// (closed), or over all midpoints when `j` is `None`.
pub fn p_variation_on(g: &GridFunction, p: f64, j: Option<Interval>) -> Result<PVariationResult, ObservableError> {
    let xs = g.midpoints();
    let (pts, values): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(&g.values).filter(|(x, _)| j.is_none_or(|j| j.contains(**x))).map(|(x, v)| (*x, *v)).unzip();
    let (value, idx) = p_variation_values(&values, p)?;
    Ok(PVariationResult { p, value, witness: idx.into_iter().map(|i| pts[i]).collect() })
}

/// Returns the `p`-variation of the sequence and the indices of a
/// maximizing subsequence.
pub fn p_variation_values(values: &[f64], p: f64) -> Result<(f64, Vec<usize>), ObservableError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(ObservableError::InvalidP { p });
    }
    let ext = extrema(values);
    if ext.len() < 2 {
        return Ok((0.0, ext));
    }
    if p == 1.0 {
        let mut s = 0.0;
        for w in ext.windows(2) {
            s += (values[w[1]] - values[w[0]]).abs();
        }
        return Ok((s, ext));
    }
    // best[j]: largest Σ|Δ|^p over chains of extrema ending at ext[j]
    let e = ext.len();
    let mut best = vec![0.0f64; e];
    let mut prev = vec![usize::MAX; e];
    for j in 1..e {
        let vj = values[ext[j]];
        for i in 0..j {
            let cand = best[i] + (vj - values[ext[i]]).abs().powf(p);
            if cand > best[j] {
                best[j] = cand;
                prev[j] = i;
            }
        }
    }
    let mut end = 0;
    for j in 1..e {
        if best[j] > best[end] {
            end = j;
        }
    }
    let mut chain = vec![ext[end]];
    let mut k = end;
    while prev[k] != usize::MAX {
        k = prev[k];
        chain.push(ext[k]);
    }
    chain.reverse();
    Ok((best[end].powf(1.0 / p), chain))
}

/// Indices of the local extrema after collapsing runs of equal values,
/// including both ends.
fn extrema(values: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<usize> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if distinct.last().is_none_or(|&k| values[k] != v) {
            distinct.push(i);
        }
    }
    if distinct.len() <= 2 {
        return distinct;
    }
    let mut out = vec![distinct[0]];
    for w in distinct.windows(3) {
        let (a, b, c) = (values[w[0]], values[w[1]], values[w[2]]);
        if (b > a) != (c > b) {
            out.push(w[1]);
        }
    }
    out.push(distinct[distinct.len() - 1]);
    out
}
