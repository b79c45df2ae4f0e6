use serde::Serialize;

use crate::grid::Interval;
use crate::map_model::{BranchLaw, PiecewiseMap};
use crate::par;

/// Sparse Ulam discretization: `M[k][j]` is the fraction of cell `j` that
/// `T` sends into cell `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UlamMatrix {
    pub n: usize,
    pub support: Interval,
    /// Column `j` as `(k, M[k][j])` pairs sorted by `k`.
    pub columns: Vec<Vec<(usize, f64)>>,
    /// The same entries grouped by row, as `(j, M[k][j])`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl UlamMatrix {
    pub fn column_sums(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.iter().map(|e| e.1).sum()).collect()
    }

    pub fn entry(&self, k: usize, j: usize) -> f64 {
        self.columns[j].iter().find(|e| e.0 == k).map_or(0.0, |e| e.1)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `M·v`; each row is summed in column order.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        par::map_range(self.n, |k| {
            let mut s = 0.0;
            for &(j, m) in &self.rows[k] {
                s += m * v[j];
            }
            s
        })
    }
}

/// Assembles the Ulam matrix of `map` on `n` uniform cells of its interval.
pub fn ulam_matrix(map: &PiecewiseMap, n: usize) -> UlamMatrix {
    let support = map.interval;
    let width = support.width() / n as f64;
    let columns: Vec<Vec<(usize, f64)>> = par::map_range(n, |j| {
        let cell = support.cell(j, n);
        let mut col: Vec<(usize, f64)> = Vec::new();
        for b in &map.branches {
            let Some(part) = cell.intersect(&b.domain) else {
                continue;
            };
            let image = b.image_of(&part);
            let first = cell_of(&support, n, image.lo);
            let last = cell_of(&support, n, image.hi);
            for k in first..=last {
                let Some(hit) = support.cell(k, n).intersect(&image) else {
                    continue;
                };
                let len = match b.law {
                    BranchLaw::Affine { slope, .. } => hit.width() / slope.abs(),
                    BranchLaw::Smooth { .. } => (b.inverse(hit.hi) - b.inverse(hit.lo)).abs(),
                };
                if len > 0.0 {
                    col.push((k, len / width));
                }
            }
        }
        col.sort_by_key(|e| e.0);
        // merge duplicates from different branches
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
        for (k, m) in col {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += m,
                _ => merged.push((k, m)),
            }
        }
        merged
    });
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, col) in columns.iter().enumerate() {
        for &(k, m) in col {
            rows[k].push((j, m));
        }
    }
    UlamMatrix { n, support, columns, rows }
}

fn cell_of(support: &Interval, n: usize, x: f64) -> usize {
    let t = (x - support.lo) / support.width() * n as f64;
    if t <= 0.0 {
        0
    } else {
        (t.floor() as usize).min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{build_map, MapSpec};

    #[test]
    fn doubling_two_cells() {
        let t = build_map(&MapSpec::Doubling { ell: 2 }).unwrap();
        let m = ulam_matrix(&t, 2);
        for k in 0..2 {
            for j in 0..2 {
                assert_eq!(m.entry(k, j), 0.5);
            }
        }
    }

    #[test]
    fn doubling_four_cells() {
        let t = build_map(&MapSpec::Doubling { ell: 2 }).unwrap();
        let m = ulam_matrix(&t, 4);
        // cell j spreads over the two cells covering T(cell j)
        for j in 0..4 {
            let rows: Vec<usize> = m.columns[j].iter().map(|e| e.0).collect();
            let first = (2 * j) % 4;
            assert_eq!(rows, vec![first, first + 1]);
            assert!(m.columns[j].iter().all(|e| e.1 == 0.5));
        }
    }

    #[test]
    fn columns_are_stochastic() {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        for spec in [
            MapSpec::Doubling { ell: 3 },
            MapSpec::Beta { beta: g },
            MapSpec::Tent,
            MapSpec::Unimodal { slope: 1.7, peak: 1.0, square: false },
        ] {
            let t = build_map(&spec).unwrap();
            let m = ulam_matrix(&t, 512);
            for (j, s) in m.column_sums().iter().enumerate() {
                assert!((s - 1.0).abs() < 1e-10, "{spec:?} column {j}: {s}");
            }
            assert!(m.columns.iter().flatten().all(|e| e.1 >= 0.0));
        }
    }
}
