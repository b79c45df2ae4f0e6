//! Orthonormal bases of `Ker P` and the coefficient functionals
//! `c_{i,j}(u) = ⟨u, φ_i∘T^j⟩_{hm}`.

mod lambda;

use serde::Serialize;
use thiserror::Error;

pub use lambda::{lambda_family, DyadicInterval, LambdaFunction};

use crate::grid::{GridFunction, Interpolation, Interval};
use crate::map_model::PiecewiseMap;
use crate::observables::{inner_product_grid, l1_hm, Observable};
use crate::par;
use crate::transfer_operator::{perron_frobenius_at, InvariantDensity, NormalizedOperator, TransferError};

/// Quadrature size used for the built-in checks of the Fourier basis.
const FOURIER_CHECK_N: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("no admissible Λ pair up to dyadic depth {depth}")]
    EmptyFamily { depth: u32 },
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

impl BasisError {
    pub fn code(&self) -> &'static str {
        match self {
            BasisError::EmptyFamily { .. } => "basis::EmptyFamily",
            BasisError::Transfer(e) => e.code(),
        }
    }
}

/// A kernel function `φ_i`, used at composition level `level`.
#[derive(Debug, Clone)]
pub struct BasisElement {
    pub id: usize,
    pub level: usize,
    pub label: String,
    pub phi: Observable,
    /// `⟨φ, φ⟩_{hm}` at construction.
    pub norm_check: f64,
    /// `‖Pφ‖_{L¹(hm)}` at construction.
    pub kernel_residual: f64,
}

/// `√2 cos(2πnx)` and `√2 sin(2πnx)` for `1 ≤ n ≤ n_max` with `ℓ ∤ n`,
/// ordered by frequency with the cosine first.
pub fn fourier_kernel_basis(ell: u32, n_max: usize) -> Vec<BasisElement> {
    let r2 = std::f64::consts::SQRT_2;
    let xs = Interval::UNIT.midpoints(FOURIER_CHECK_N);
    let mut out = Vec::new();
    for n in (1..=n_max).filter(|n| n % ell as usize != 0) {
        for (kind, phi) in [("cos", Observable::cos(n as f64, r2)), ("sin", Observable::sin(n as f64, r2))] {
            let vals: Vec<f64> = xs.iter().map(|&x| phi.eval(x)).collect();
            let norm = vals.iter().map(|v| v * v).sum::<f64>() / FOURIER_CHECK_N as f64;
            let kernel = xs
                .iter()
                .map(|&y| {
                    let l = ell as f64;
                    (0..ell).map(|k| phi.eval((y + k as f64) / l) / l).sum::<f64>().abs()
                })
                .sum::<f64>()
                / FOURIER_CHECK_N as f64;
            out.push(BasisElement {
                id: out.len(),
                level: 0,
                label: format!("{kind}{n}"),
                phi,
                norm_check: norm,
                kernel_residual: kernel,
            });
        }
    }
    out
}

/// Modified Gram-Schmidt (with one re-orthogonalization pass) on the grid
/// samples of `family` in `⟨·,·⟩_{hm}`. Vectors whose norm after projection
/// falls below `drop_tol` are discarded. Each output is stored as a linear
/// combination of the inputs.
pub fn gram_schmidt(
    map: &PiecewiseMap,
    family: &[Observable],
    h: &InvariantDensity,
    drop_tol: f64,
) -> Result<Vec<BasisElement>, BasisError> {
    let n = h.n();
    let support = h.support();
    let samples: Vec<Vec<f64>> = family.iter().map(|f| f.sample(support, n).values).collect();
    let dot = |a: &[f64], b: &[f64]| inner_product_grid(a, b, &h.h);
    // q_k = Σ_m coef[k][m] f_m
    let mut qs: Vec<Vec<f64>> = Vec::new();
    let mut coefs: Vec<Vec<f64>> = Vec::new();
    for (m, f) in samples.iter().enumerate() {
        let mut v = f.clone();
        let mut c = vec![0.0; family.len()];
        c[m] = 1.0;
        for _pass in 0..2 {
            for (q, cq) in qs.iter().zip(&coefs) {
                let r = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= r * b);
                c.iter_mut().zip(cq).for_each(|(a, b)| *a -= r * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if !(norm >= drop_tol) {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        c.iter_mut().for_each(|a| *a /= norm);
        qs.push(v);
        coefs.push(c);
    }
    let op = NormalizedOperator::new(map, h, crate::transfer_operator::DENSITY_FLOOR)?;
    Ok(qs
        .iter()
        .zip(coefs)
        .enumerate()
        .map(|(id, (q, c))| {
            let parts: Vec<(f64, Observable)> =
                c.iter().zip(family).filter(|(a, _)| **a != 0.0).map(|(a, f)| (*a, f.clone())).collect();
            let phi = Observable::Combination(parts);
            let pphi = op.apply_fn(|x| phi.eval(x), Interpolation::Nearest);
            BasisElement {
                id,
                level: 0,
                label: format!("gs{id}"),
                norm_check: dot(q, q),
                kernel_residual: l1_hm(&pphi.values, &h.h),
                phi,
            }
        })
        .collect())
}

/// Kernel basis for `map`: the Fourier shortcut for `ℓx mod 1`, otherwise
/// Gram-Schmidt on a Λ-family.
pub fn kernel_basis(
    map: &PiecewiseMap,
    h: &InvariantDensity,
    n_max: usize,
    budget: usize,
    max_depth: u32,
) -> Result<Vec<BasisElement>, BasisError> {
    if let crate::map_model::MapKind::Doubling { ell } = map.kind {
        return Ok(fourier_kernel_basis(ell, n_max));
    }
    let fam: Vec<Observable> =
        lambda_family(map, h, budget, max_depth)?.iter().map(LambdaFunction::to_observable).collect();
    gram_schmidt(map, &fam, h, 1e-8)
}

/// Samples of `φ_i∘T^j` at the density midpoints, for `j = 0…J`.
#[derive(Debug, Clone)]
pub struct BasisGrid {
    pub n: usize,
    pub levels: usize,
    pub labels: Vec<String>,
    /// `values[i][j]` holds `φ_i∘T^j` at the midpoints.
    pub values: Vec<Vec<Vec<f64>>>,
    density: GridFunction,
}

impl BasisGrid {
    pub fn new(basis: &[BasisElement], map: &PiecewiseMap, h: &InvariantDensity, max_level: usize) -> Self {
        let xs = h.support().midpoints(h.n());
        // orbits[j][k] = T^j(x_k)
        let mut orbits = vec![xs.clone()];
        for j in 1..=max_level {
            let next = par::map_slice(&orbits[j - 1], |&x| map.apply(x));
            orbits.push(next);
        }
        let values =
            basis.iter().map(|b| orbits.iter().map(|pts| par::map_slice(pts, |&x| b.phi.eval(x))).collect()).collect();
        BasisGrid {
            n: h.n(),
            levels: max_level + 1,
            labels: basis.iter().map(|b| b.label.clone()).collect(),
            values,
            density: h.h.clone(),
        }
    }

    /// Coefficient table of a sampled observable.
    pub fn table(&self, u: &[f64]) -> CoefficientTable {
        let entries = self
            .values
            .iter()
            .map(|row| row.iter().map(|phi| inner_product_grid(u, phi, &self.density)).collect())
            .collect();
        CoefficientTable {
            rows: (0..self.values.len()).collect(),
            labels: self.labels.clone(),
            levels: self.levels - 1,
            entries,
            quadrature_n: self.n,
        }
    }

    pub fn table_of(&self, u: &Observable) -> CoefficientTable {
        self.table(&u.sample(self.density.support, self.n).values)
    }
}

/// `c_{i,j}(u)` for basis rows `i` and levels `j = 0…levels`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub rows: Vec<usize>,
    pub labels: Vec<String>,
    pub levels: usize,
    pub entries: Vec<Vec<f64>>,
    pub quadrature_n: usize,
}

impl CoefficientTable {
    pub fn get(&self, row: usize, level: usize) -> f64 {
        self.entries[row][level]
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|v| v.is_finite())
    }
}

/// `c_{i,j}(u) = ∫ u·φ_i∘T^j·h dm` by midpoint quadrature at the density
/// resolution, with `T^j` evaluated along exact orbits.
pub fn coefficient_table(
    u: &Observable,
    basis: &[BasisElement],
    map: &PiecewiseMap,
    h: &InvariantDensity,
    max_level: usize,
) -> CoefficientTable {
    BasisGrid::new(basis, map, h, max_level).table_of(u)
}

/// Where the coefficient sequence of an observable first becomes nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstruction {
    At { row: usize, level: usize, value: f64 },
    Constant,
}

/// First row (in table order) with an entry above `threshold`, and the
/// smallest such level in that row.
pub fn first_obstruction(table: &CoefficientTable, threshold: f64) -> Obstruction {
    for (row, vals) in table.entries.iter().enumerate() {
        if let Some(level) = vals.iter().position(|v| v.abs() > threshold) {
            return Obstruction::At { row, level, value: vals[level] };
        }
    }
    Obstruction::Constant
}

/// `‖Φ(f h)‖_{L¹(m)}` on the density grid for an evaluable `f`.
pub fn kernel_defect(map: &PiecewiseMap, h: &InvariantDensity, f: &Observable) -> f64 {
    let xs = h.support().midpoints(h.n());
    let vals = par::map_slice(&xs, |&y| perron_frobenius_at(map, y, |x| f.eval(x) * h.h.eval(x)).abs());
    par::ordered_sum(&vals) * h.support().width() / h.n() as f64
}
