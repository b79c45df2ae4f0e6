//! Piecewise monotone interval maps with explicit branch structure.
//!
//! A [`PiecewiseMap`] stores its monotone branches in order, each with an
//! exact (affine) or bisection-based inverse. Built-in families are created
//! with [`build_map`] from a [`MapSpec`]; derived maps come from
//! [`PiecewiseMap::compose`] (branch composition, e.g. `T²`) and
//! [`PiecewiseMap::conjugate_by`].

mod branch;
mod horseshoe;
mod transition;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use branch::{Branch, BranchLaw};
pub use horseshoe::{covering_for, find_horseshoe, Covering, HorseshoeWitness};
pub use transition::{transition_matrix, TransitionMatrix};

use crate::grid::Interval;
use crate::homeo::Homeomorphism;

/// Number of samples per branch used by the structural checks.
const CHECK_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    InvalidParams(String),
    #[error("not a horseshoe: {0}")]
    NotAHorseshoe(String),
}

impl MapError {
    pub fn code(&self) -> &'static str {
        match self {
            MapError::InvalidParams(_) => "map_model::InvalidParams",
            MapError::NotAHorseshoe(_) => "map_model::NotAHorseshoe",
        }
    }
}

/// One affine piece in a configuration table: the domain and the images of
/// its left and right endpoints (in that order, so a decreasing piece lists
/// the larger value first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub domain: Interval,
    pub image: [f64; 2],
}

/// Declarative description of a map, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `x ↦ ℓx mod 1` on `[0, 1]`.
    Doubling {
        #[serde(default = "default_ell")]
        ell: u32,
    },
    /// `x ↦ βx mod 1` on `[0, 1]`.
    Beta { beta: f64 },
    /// The full tent map on `[0, 1]`.
    Tent,
    /// Piecewise affine map with every `|slope| > 1`.
    PiecewiseLinear { pieces: Vec<PieceSpec> },
    /// Symmetric unimodal map on `[-1, 1]` with `T(0) = peak`,
    /// `T(±1) = −1` and `inf |T′| = slope`. With `square`, the second
    /// iterate is returned instead.
    Unimodal {
        slope: f64,
        #[serde(default = "default_peak")]
        peak: f64,
        #[serde(default)]
        square: bool,
    },
    /// Piecewise affine map without the expansion requirement.
    Custom { pieces: Vec<PieceSpec> },
}

fn default_ell() -> u32 {
    2
}

fn default_peak() -> f64 {
    1.0
}

/// Tag recording which family a map came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    Doubling { ell: u32 },
    Beta { beta: f64 },
    Tent,
    PiecewiseLinear,
    Unimodal { slope: f64, peak: f64 },
    UnimodalSquare { slope: f64, peak: f64 },
    Custom,
    Composed,
    Conjugate { label: String },
}

impl MapKind {
    fn is_builtin(&self) -> bool {
        !matches!(self, MapKind::Custom | MapKind::Composed | MapKind::Conjugate { .. })
    }
}

/// A piecewise monotone map `T: I → I`.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    pub interval: Interval,
    pub branches: Vec<Branch>,
    /// The invariant core `I⋆`.
    pub core: Interval,
    /// Estimate of `inf |T′|` over the branches.
    pub expansion: f64,
    pub kind: MapKind,
    pub horseshoe: Option<HorseshoeWitness>,
    pub covering: Option<Covering>,
}

impl PiecewiseMap {
    /// Assembles a map from ordered branches and validates it.
    pub fn from_branches(
        interval: Interval,
        branches: Vec<Branch>,
        core: Interval,
        kind: MapKind,
    ) -> Result<Self, MapError> {
        let expansion = branches
            .iter()
            .map(|b| match b.law {
                BranchLaw::Affine { slope, .. } => slope.abs(),
                BranchLaw::Smooth { .. } => interior_samples(&b.domain, CHECK_SAMPLES)
                    .map(|x| b.derivative(x).abs())
                    .fold(f64::INFINITY, f64::min),
            })
            .fold(f64::INFINITY, f64::min);
        let map = PiecewiseMap { interval, branches, core, expansion, kind, horseshoe: None, covering: None };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<(), MapError> {
        let bad = |s: String| Err(MapError::InvalidParams(s));
        if !self.interval.is_valid() || self.branches.is_empty() {
            return bad("empty interval or no branches".into());
        }
        let tol = 1e-12 * self.interval.width().max(1.0);
        if (self.branches[0].domain.lo - self.interval.lo).abs() > tol
            || (self.branches[self.branches.len() - 1].domain.hi - self.interval.hi).abs() > tol
        {
            return bad("branch domains do not cover the interval".into());
        }
        for (i, w) in self.branches.windows(2).enumerate() {
            let gap = w[1].domain.lo - w[0].domain.hi;
            if gap.abs() > tol {
                let what = if gap > 0.0 { "gap" } else { "overlap" };
                return bad(format!("{what} between branches {i} and {}", i + 1));
            }
        }
        for (i, b) in self.branches.iter().enumerate() {
            if !b.domain.is_valid() {
                return bad(format!("branch {i} has an empty domain"));
            }
            let xs: Vec<f64> = interior_samples(&b.domain, CHECK_SAMPLES).collect();
            let ys: Vec<f64> = xs.iter().map(|&x| b.forward(x)).collect();
            if ys.windows(2).any(|w| (w[1] > w[0]) != b.increasing || w[1] == w[0]) {
                return bad(format!("branch {i} is not strictly monotone"));
            }
            let dmin = xs.iter().map(|&x| b.derivative(x).abs()).fold(f64::INFINITY, f64::min);
            if !(dmin > 0.0) {
                return bad(format!("branch {i} has vanishing derivative"));
            }
            let width = b.domain.width();
            if let Some(x) = xs.iter().find(|&&x| (b.inverse(b.forward(x)) - x).abs() > 1e-12 * width.max(1.0)) {
                return bad(format!("branch {i} inverse fails the round trip at x = {x}"));
            }
            if b.image.lo < self.interval.lo - tol || b.image.hi > self.interval.hi + tol {
                return bad(format!("branch {i} maps outside the interval"));
            }
        }
        if !self.interval.contains_interval(&self.core, tol) || !self.core.is_valid() {
            return bad("core is not a subinterval".into());
        }
        for x in interior_samples(&self.core, CHECK_SAMPLES) {
            let y = self.apply(x);
            if y < self.core.lo - tol || y > self.core.hi + tol {
                return bad(format!("core is not invariant: T({x}) = {y}"));
            }
        }
        if self.kind.is_builtin() && !(self.expansion > 1.0) {
            return bad(format!("expansion {} is not > 1", self.expansion));
        }
        Ok(())
    }

    /// Index of the branch whose half-open domain contains `x`; the right
    /// endpoint of `I` belongs to the last branch.
    pub fn branch_index(&self, x: f64) -> usize {
        let k = self.branches.partition_point(|b| b.domain.lo <= x);
        k.saturating_sub(1).min(self.branches.len() - 1)
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].forward(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].derivative(x)
    }

    /// `T^n(x)`.
    pub fn iterate(&self, x: f64, n: usize) -> f64 {
        (0..n).fold(x, |y, _| self.apply(y))
    }

    /// `[x, Tx, …, Tⁿx]`.
    pub fn orbit(&self, x: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut y = x;
        out.push(y);
        for _ in 0..n {
            y = self.apply(y);
            out.push(y);
        }
        out
    }

    /// Preimages `(branch, σ_j(y))` of `y` over every branch whose image
    /// contains it.
    pub fn preimages(&self, y: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.branches.iter().enumerate().filter(move |(_, b)| b.image.contains(y)).map(move |(j, b)| (j, b.inverse(y)))
    }

    pub fn with_horseshoe(mut self, witness: HorseshoeWitness) -> Self {
        self.horseshoe = Some(witness);
        self
    }

    pub fn with_covering(mut self, covering: Covering) -> Self {
        self.covering = Some(covering);
        self
    }

    /// Branch composition `outer ∘ self`.
    pub fn compose(&self, outer: &PiecewiseMap) -> Result<PiecewiseMap, MapError> {
        let mut pieces = Vec::new();
        for inner in &self.branches {
            for ob in &outer.branches {
                let Some(hit) = inner.image.intersect(&ob.domain) else {
                    continue;
                };
                let domain = inner.preimage_of(&hit);
                if !domain.is_valid() {
                    continue;
                }
                pieces.push(compose_branches(domain, inner, ob));
            }
        }
        pieces.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        PiecewiseMap::from_branches(self.interval, pieces, self.core, MapKind::Composed)
    }

    /// The second iterate `T∘T`, keeping this map's core and kind family.
    pub fn square(&self) -> Result<PiecewiseMap, MapError> {
        let mut sq = self.compose(self)?;
        if let MapKind::Unimodal { slope, peak } = self.kind {
            sq.kind = MapKind::UnimodalSquare { slope, peak };
        }
        Ok(sq)
    }

    /// The conjugate map `H ∘ T ∘ H⁻¹` on `H(I)`.
    pub fn conjugate_by(&self, h: &Homeomorphism) -> Result<PiecewiseMap, MapError> {
        let mut branches: Vec<Branch> = self
            .branches
            .iter()
            .map(|b| {
                let domain = Interval::hull(h.apply(b.domain.lo), h.apply(b.domain.hi));
                let (b1, b2, b3) = (b.clone(), b.clone(), b.clone());
                let (h1, h2, h3) = (h.clone(), h.clone(), h.clone());
                Branch::smooth(
                    domain,
                    Arc::new(move |y| h1.apply(b1.forward(h1.inverse(y)))),
                    Arc::new(move |y| {
                        let x = h2.inverse(y);
                        h2.derivative(b2.forward(x)) * b2.derivative(x) / h2.derivative(x)
                    }),
                    Some(Arc::new(move |y| h3.apply(b3.inverse(h3.inverse(y))))),
                )
            })
            .collect();
        branches.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        let core = Interval::hull(h.apply(self.core.lo), h.apply(self.core.hi));
        PiecewiseMap::from_branches(h.range, branches, core, MapKind::Conjugate { label: h.label.clone() })
    }
}

fn compose_branches(domain: Interval, inner: &Branch, outer: &Branch) -> Branch {
    if let (BranchLaw::Affine { slope: s1, offset: o1 }, BranchLaw::Affine { slope: s2, offset: o2 }) =
        (&inner.law, &outer.law)
    {
        let mut b = Branch::affine(domain, s2 * s1, s2 * o1 + o2);
        b.image = Interval::hull(outer.forward(inner.forward(domain.lo)), outer.forward(inner.forward(domain.hi)));
        return b;
    }
    let (i1, i2, i3) = (inner.clone(), inner.clone(), inner.clone());
    let (o1, o2, o3) = (outer.clone(), outer.clone(), outer.clone());
    Branch::smooth(
        domain,
        Arc::new(move |x| o1.forward(i1.forward(x))),
        Arc::new(move |x| o2.derivative(i2.forward(x)) * i2.derivative(x)),
        Some(Arc::new(move |y| i3.inverse(o3.inverse(y)))),
    )
}

/// `n` evenly spaced points strictly inside `iv`.
pub(crate) fn interior_samples(iv: &Interval, n: usize) -> impl Iterator<Item = f64> + '_ {
    (0..n).map(move |k| iv.midpoint(k, n))
}

/// Builds one of the built-in families.
pub fn build_map(spec: &MapSpec) -> Result<PiecewiseMap, MapError> {
    match *spec {
        MapSpec::Doubling { ell } => doubling(ell),
        MapSpec::Beta { beta } => beta_map(beta),
        MapSpec::Tent => tent(),
        MapSpec::PiecewiseLinear { ref pieces } => piecewise_affine(pieces, MapKind::PiecewiseLinear),
        MapSpec::Custom { ref pieces } => piecewise_affine(pieces, MapKind::Custom),
        MapSpec::Unimodal { slope, peak, square } => unimodal(slope, peak, square),
    }
}

fn doubling(ell: u32) -> Result<PiecewiseMap, MapError> {
    if ell < 2 {
        return Err(MapError::InvalidParams(format!("ℓ must be an integer ≥ 2, got {ell}")));
    }
    let l = ell as f64;
    let branches = (0..ell)
        .map(|k| {
            let domain = Interval::new(k as f64 / l, (k + 1) as f64 / l);
            Branch::affine(domain, l, -(k as f64))
        })
        .collect();
    let map = PiecewiseMap::from_branches(Interval::UNIT, branches, Interval::UNIT, MapKind::Doubling { ell })?;
    let w = find_horseshoe(&map, Interval::UNIT, Interval::new(0.0, 1.0 / l), Interval::new(1.0 / l, 2.0 / l))?;
    Ok(map.with_horseshoe(w).with_covering(Covering { k: 1, j: 0 }))
}

fn beta_map(beta: f64) -> Result<PiecewiseMap, MapError> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(MapError::InvalidParams(format!("β must be a real > 1, got {beta}")));
    }
    let m = beta.ceil() as usize;
    let branches = (0..m)
        .map(|k| {
            let lo = k as f64 / beta;
            let hi = ((k + 1) as f64 / beta).min(1.0);
            let mut b = Branch::affine(Interval::new(lo, hi), beta, -(k as f64));
            // the last branch may be partial: record its true image
            let top = if (k + 1) as f64 <= beta { 1.0 } else { beta - k as f64 };
            b.image = Interval::new(0.0, top);
            b
        })
        .filter(|b| b.domain.is_valid())
        .collect();
    let map = PiecewiseMap::from_branches(Interval::UNIT, branches, Interval::UNIT, MapKind::Beta { beta })?;
    if beta >= 2.0 {
        let w = find_horseshoe(
            &map,
            Interval::UNIT,
            Interval::new(0.0, 1.0 / beta),
            Interval::new(1.0 / beta, 2.0 / beta),
        )?;
        return Ok(map.with_horseshoe(w).with_covering(Covering { k: 1, j: 0 }));
    }
    Ok(map)
}

fn tent() -> Result<PiecewiseMap, MapError> {
    let branches = vec![
        Branch::affine_onto(Interval::new(0.0, 0.5), 0.0, 1.0),
        Branch::affine_onto(Interval::new(0.5, 1.0), 1.0, 0.0),
    ];
    let map = PiecewiseMap::from_branches(Interval::UNIT, branches, Interval::UNIT, MapKind::Tent)?;
    let w = find_horseshoe(&map, Interval::UNIT, Interval::new(0.0, 0.5), Interval::new(0.5, 1.0))?;
    Ok(map.with_horseshoe(w).with_covering(Covering { k: 1, j: 0 }))
}

fn piecewise_affine(pieces: &[PieceSpec], kind: MapKind) -> Result<PiecewiseMap, MapError> {
    if pieces.is_empty() {
        return Err(MapError::InvalidParams("empty piece table".into()));
    }
    let mut sorted = pieces.to_vec();
    sorted.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
    let branches: Vec<Branch> = sorted.iter().map(|p| Branch::affine_onto(p.domain, p.image[0], p.image[1])).collect();
    if kind == MapKind::PiecewiseLinear {
        if let Some((i, b)) = branches.iter().enumerate().find(|(_, b)| b.derivative(0.0).abs() <= 1.0) {
            return Err(MapError::InvalidParams(format!("piece {i} has slope {} with |slope| ≤ 1", b.derivative(0.0))));
        }
    }
    let interval = Interval::new(branches[0].domain.lo, branches[branches.len() - 1].domain.hi);
    PiecewiseMap::from_branches(interval, branches, interval, kind)
}

/// Parameters of the symmetric unimodal family
/// `T(x) = c − s|x| − (1 + c − s)x²` on `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
struct Unimodal {
    s: f64,
    c: f64,
}

impl Unimodal {
    fn quad(&self) -> f64 {
        1.0 + self.c - self.s
    }

    fn right(&self, x: f64) -> f64 {
        self.c - self.s * x - self.quad() * x * x
    }

    fn right_inverse(&self, y: f64) -> f64 {
        let d = (self.c - y).max(0.0);
        2.0 * d / (self.s + (self.s * self.s + 4.0 * self.quad() * d).sqrt())
    }

    /// The fixed point in `[0, 1]`.
    fn fixed_point(&self) -> f64 {
        let a = self.quad();
        2.0 * self.c / ((self.s + 1.0) + ((self.s + 1.0).powi(2) + 4.0 * a * self.c).sqrt())
    }
}

fn unimodal(slope: f64, peak: f64, square: bool) -> Result<PiecewiseMap, MapError> {
    if !(slope > 1.0) || !(peak > 0.0 && peak <= 1.0) || slope > 1.0 + peak {
        return Err(MapError::InvalidParams(format!(
            "unimodal map needs 1 < slope ≤ 1 + peak and 0 < peak ≤ 1, got slope={slope}, peak={peak}"
        )));
    }
    let u = Unimodal { s: slope, c: peak };
    let (l1, l2, l3, r1, r2, r3) = (u, u, u, u, u, u);
    let left = Branch::smooth(
        Interval::new(-1.0, 0.0),
        Arc::new(move |x: f64| l1.right(-x)),
        Arc::new(move |x: f64| l2.s - 2.0 * l2.quad() * x),
        Some(Arc::new(move |y: f64| -l3.right_inverse(y))),
    );
    let right = Branch::smooth(
        Interval::new(0.0, 1.0),
        Arc::new(move |x: f64| r1.right(x)),
        Arc::new(move |x: f64| -r2.s - 2.0 * r2.quad() * x),
        Some(Arc::new(move |y: f64| r3.right_inverse(y))),
    );
    let core = Interval::new(u.right(peak), peak);
    let map = PiecewiseMap::from_branches(
        Interval::new(-1.0, 1.0),
        vec![left, right],
        core,
        MapKind::Unimodal { slope, peak },
    )?;
    if !square {
        return Ok(map);
    }
    let sq = map.square()?;
    if slope > std::f64::consts::SQRT_2 {
        let p = u.fixed_point();
        let q = u.right_inverse(-p);
        // T maps (−p, σ_L(q)) increasingly onto (p, q), which T maps onto (−p, p).
        let inner = -u.right_inverse(q);
        let w = find_horseshoe(&sq, Interval::new(-p, p), Interval::new(-p, inner), Interval::new(-inner, p))?;
        return Ok(sq.with_horseshoe(w));
    }
    Ok(sq)
}
