use serde::Serialize;

use super::PiecewiseMap;

/// Branch-to-branch adjacency of a piecewise monotone map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionMatrix {
    pub entries: Vec<Vec<u8>>,
    /// Smallest `k ≤ m²` with every entry of `A^k` positive.
    pub primitivity_power: Option<usize>,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

/// `a_ij = 1` when the open image `T(int I_i)` meets `int I_j`.
pub fn transition_matrix(map: &PiecewiseMap) -> TransitionMatrix {
    let entries: Vec<Vec<u8>> = map
        .branches
        .iter()
        .map(|bi| map.branches.iter().map(|bj| u8::from(bi.image.intersect(&bj.domain).is_some())).collect())
        .collect();
    let primitivity_power = primitivity(&entries);
    TransitionMatrix { entries, primitivity_power }
}

fn primitivity(a: &[Vec<u8>]) -> Option<usize> {
    let m = a.len();
    let mut power = a.to_vec();
    for k in 1..=m * m {
        if power.iter().all(|row| row.iter().all(|&x| x == 1)) {
            return Some(k);
        }
        power = bool_product(&power, a);
    }
    None
}

fn bool_product(x: &[Vec<u8>], y: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let m = x.len();
    (0..m).map(|i| (0..m).map(|j| u8::from((0..m).any(|k| x[i][k] == 1 && y[k][j] == 1))).collect()).collect()
}
