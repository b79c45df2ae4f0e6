use serde::{Deserialize, Serialize};

use super::{MapError, PiecewiseMap};
use crate::grid::Interval;

const TOL: f64 = 1e-9;

/// Verified horseshoe: `J1, J2 ⊂ J` disjoint, each inside one branch and
/// mapped over `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeWitness {
    pub j: Interval,
    pub j1: Interval,
    pub j2: Interval,
    pub branch_ids: [usize; 2],
}

/// Finite covering data: `T^j` maps the horseshoe interval onto a cover of
/// the core using `k` monotone pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covering {
    pub k: usize,
    pub j: usize,
}

/// Checks the horseshoe clauses in order and reports the first failure.
pub fn find_horseshoe(
    map: &PiecewiseMap,
    j: Interval,
    j1: Interval,
    j2: Interval,
) -> Result<HorseshoeWitness, MapError> {
    let fail = |clause: &str| Err(MapError::NotAHorseshoe(clause.to_string()));
    if !j.is_valid() || !j1.is_valid() || !j2.is_valid() {
        return fail("intervals must be non-empty");
    }
    if !map.core.contains_interval(&j, TOL) {
        return fail("J ⊆ I⋆");
    }
    if !j.contains_interval(&j1, TOL) || !j.contains_interval(&j2, TOL) {
        return fail("J1, J2 ⊆ J");
    }
    if j1.hi > j2.lo + TOL && j2.hi > j1.lo + TOL {
        return fail("J1 ∩ J2 = ∅");
    }
    let owner = |sub: &Interval| map.branches.iter().position(|b| b.domain.contains_interval(sub, TOL));
    let (Some(b1), Some(b2)) = (owner(&j1), owner(&j2)) else {
        return fail("each J_i lies in one branch");
    };
    for (sub, b) in [(j1, b1), (j2, b2)] {
        if !covers(&map.branches[b].image_of(&sub), &j) {
            return fail("T(J_i) ⊇ J");
        }
    }
    Ok(HorseshoeWitness { j, j1, j2, branch_ids: [b1, b2] })
}

fn covers(outer: &Interval, inner: &Interval) -> bool {
    outer.lo <= inner.lo + TOL && outer.hi >= inner.hi - TOL
}

/// Smallest `j ≤ max_j` such that the images of the monotone pieces of
/// `T^j` on `h` cover the core; `k` counts those pieces.
pub fn covering_for(map: &PiecewiseMap, h: Interval, max_j: usize) -> Option<Covering> {
    const MAX_PIECES: usize = 1 << 16;
    let mut images = vec![h];
    for j in 0..=max_j {
        if union_covers(&images, &map.core) {
            return Some(Covering { k: images.len(), j });
        }
        let mut next = Vec::new();
        for im in &images {
            for b in &map.branches {
                if let Some(part) = im.intersect(&b.domain) {
                    next.push(b.image_of(&part));
                }
            }
        }
        if next.is_empty() || next.len() > MAX_PIECES {
            return None;
        }
        images = next;
    }
    None
}

fn union_covers(pieces: &[Interval], target: &Interval) -> bool {
    let mut sorted = pieces.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut reach = target.lo;
    for p in sorted {
        if p.lo > reach + TOL {
            break;
        }
        reach = reach.max(p.hi);
    }
    reach >= target.hi - TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{build_map, MapSpec};

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b)
    }

    #[test]
    fn doubling_and_tent_witnesses() {
        for spec in [MapSpec::Doubling { ell: 2 }, MapSpec::Tent] {
            let t = build_map(&spec).unwrap();
            let w = find_horseshoe(&t, iv(0.0, 1.0), iv(0.0, 0.5), iv(0.5, 1.0)).unwrap();
            assert_eq!(w.branch_ids, [0, 1]);
        }
    }

    #[test]
    fn half_interval_is_not_a_horseshoe_for_doubling() {
        let t = build_map(&MapSpec::Doubling { ell: 2 }).unwrap();
        let err = find_horseshoe(&t, iv(0.0, 0.5), iv(0.0, 0.25), iv(0.25, 0.5)).unwrap_err();
        assert_eq!(err, MapError::NotAHorseshoe("T(J_i) ⊇ J".into()));
    }

    #[test]
    fn clauses_are_named() {
        let t = build_map(&MapSpec::Doubling { ell: 2 }).unwrap();
        let e = find_horseshoe(&t, iv(0.0, 1.0), iv(0.0, 0.6), iv(0.4, 1.0)).unwrap_err();
        assert!(e.to_string().contains("J1 ∩ J2"), "{e}");
        let e = find_horseshoe(&t, iv(0.0, 1.0), iv(0.4, 0.6), iv(0.7, 1.0)).unwrap_err();
        assert!(e.to_string().contains("one branch"), "{e}");
    }

    #[test]
    fn unimodal_square_horseshoe_for_steep_slopes() {
        for slope in [1.42, 1.5, 1.8, 2.0] {
            let sq = build_map(&MapSpec::Unimodal { slope, peak: 1.0, square: true }).unwrap();
            assert!(sq.horseshoe.is_some(), "slope {slope}");
        }
    }

    #[test]
    fn coverings() {
        let t = build_map(&MapSpec::Doubling { ell: 2 }).unwrap();
        assert_eq!(covering_for(&t, iv(0.0, 1.0), 5), Some(Covering { k: 1, j: 0 }));
        assert_eq!(covering_for(&t, iv(0.0, 0.25), 5), Some(Covering { k: 1, j: 2 }));
        let c = covering_for(&t, iv(0.3, 0.45), 8).unwrap();
        assert_eq!(c.j, 3);
    }
}
