//! Marker sets on finite windows: greedy maximal discrete subsets and
//! d-marker sets that are both d-discrete and d-covering, with exact
//! verification.
//!
//! The dense group sequence is replaced by a seeded low-discrepancy rational
//! sequence; covering is certified on an audit grid of resolution d/2
//! restricted to points at distance ≥ d from the window boundary, which makes
//! the certificate finite and exact. Boundary effects are inherent to
//! windowing and excluded from claims.

use std::collections::{HashMap, HashSet};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{RVec, Rational};
use crate::seq::UnitSequence;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkerError {
    #[error("window edge {axis} has length {len}, need at least {need}")]
    WindowTooSmall {
        axis: usize,
        len: String,
        need: String,
    },
    #[error("window bounds are not lo < hi on axis {0}")]
    BadWindow(usize),
    #[error("covering not certified after {0} candidates")]
    CoverageNotCertified(usize),
}

/// Axis-aligned half-open box [lo, hi) in orbit coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: RVec,
    pub hi: RVec,
}

impl Window {
    pub fn new(lo: RVec, hi: RVec) -> Result<Self, MarkerError> {
        let dim = lo.dim().max(hi.dim());
        for i in 0..dim {
            if lo.coord(i) >= hi.coord(i) {
                return Err(MarkerError::BadWindow(i));
            }
        }
        Ok(Window { lo, hi })
    }

    pub fn from_ints(lo: &[i64], hi: &[i64]) -> Self {
        Window::new(RVec::from_ints(lo), RVec::from_ints(hi)).expect("valid window")
    }

    pub fn dim(&self) -> usize {
        self.lo.dim().max(self.hi.dim())
    }

    pub fn edge(&self, i: usize) -> Rational {
        self.hi.coord(i) - self.lo.coord(i)
    }

    pub fn contains(&self, p: &RVec) -> bool {
        (0..self.dim()).all(|i| p.coord(i) >= self.lo.coord(i) && p.coord(i) < self.hi.coord(i))
    }

    /// Is p at distance ≥ margin from the boundary (in sup norm)?
    pub fn is_interior(&self, p: &RVec, margin: &Rational) -> bool {
        (0..self.dim()).all(|i| {
            p.coord(i) >= &self.lo.coord(i) + margin && p.coord(i) <= &self.hi.coord(i) - margin
        })
    }
}

/// A d-marker set: pairwise sup-distance > d, covering radius ≤ d on the
/// interior audit grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub d: Rational,
    pub points: Vec<RVec>,
}

/// Greedy scan in input order: keep a point iff its sup distance to every
/// kept point exceeds d. The result is maximal: every rejected point is
/// within d of a kept one.
pub fn greedy_discrete(points: &[RVec], d: &Rational) -> Vec<RVec> {
    let mut kept: Vec<RVec> = Vec::new();
    for p in points {
        if kept.iter().all(|q| &p.sup_dist(q) > d) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Knobs for marker construction. `pitch` snaps candidates to the grid
/// lo + pitch·ℤⁿ, which the region pipeline uses to keep all cube faces on
/// one lattice.
#[derive(Clone, Debug, Default)]
pub struct MarkerParams {
    pub pitch: Option<Rational>,
    pub max_candidates: usize,
}

/// Builds a d-marker set from a seeded dense candidate sequence: candidates
/// are added greedily while a d/2-resolution interior audit grid certifies
/// covering radius ≤ d.
pub fn build_marker_set(window: &Window, d: &Rational, seed: u64) -> Result<MarkerSet, MarkerError> {
    build_marker_set_with(window, d, seed, &MarkerParams::default())
}

pub fn build_marker_set_with(
    window: &Window,
    d: &Rational,
    seed: u64,
    params: &MarkerParams,
) -> Result<MarkerSet, MarkerError> {
    let dim = window.dim();
    let two_d = Rational::from_int(2) * d;
    for i in 0..dim {
        if window.edge(i) < two_d {
            return Err(MarkerError::WindowTooSmall {
                axis: i,
                len: window.edge(i).to_string(),
                need: two_d.to_string(),
            });
        }
    }

    let audit = audit_grid(window, d);
    let mut uncovered: HashSet<usize> = (0..audit.len()).collect();
    let mut kept: Vec<RVec> = Vec::new();
    let mut index = MarkerIndex::new(window, d);

    let mut seq = UnitSequence::new(dim, seed);
    let max = if params.max_candidates > 0 {
        params.max_candidates
    } else {
        4_000_000
    };
    let mut produced = 0usize;
    while !uncovered.is_empty() {
        if produced >= max {
            return Err(MarkerError::CoverageNotCertified(produced));
        }
        let frac = seq.next_point();
        produced += 1;
        let cand = candidate_from_fraction(window, &frac, params.pitch.as_ref());
        if index.all_further_than(&cand, &kept, d) {
            index.insert(kept.len(), &cand);
            kept.push(cand);
            let m = kept.last().unwrap();
            uncovered.retain(|&i| audit[i].sup_dist(m) > *d);
        }
    }
    Ok(MarkerSet {
        d: d.clone(),
        points: kept,
    })
}

fn candidate_from_fraction(window: &Window, frac: &[Rational], pitch: Option<&Rational>) -> RVec {
    let dim = window.dim();
    let coords = (0..dim)
        .map(|i| {
            let extent = window.edge(i);
            match pitch {
                None => window.lo.coord(i) + &frac[i] * &extent,
                Some(p) => {
                    // Snap into the grid lo + p·{0, …, cells−1}.
                    let cells = (&extent / p).floor_int();
                    let mut idx = (&frac[i] * &Rational::from_bigint(cells.clone())).floor_int();
                    let top = cells - num_bigint::BigInt::from(1);
                    let zero = num_bigint::BigInt::from(0);
                    if idx > top {
                        idx = top;
                    }
                    if idx < zero {
                        idx = zero;
                    }
                    window.lo.coord(i) + Rational::from_bigint(idx) * p
                }
            }
        })
        .collect();
    RVec::new(coords)
}

/// Interior audit grid: per-axis coordinates lo + d, lo + d + d/2, …, up to
/// hi − d; the product over axes.
pub fn audit_grid(window: &Window, d: &Rational) -> Vec<RVec> {
    let dim = window.dim();
    let step = d / &Rational::from_int(2);
    let mut per_axis: Vec<Vec<Rational>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut coords = Vec::new();
        let mut c = &window.lo.coord(i) + d;
        let stop = &window.hi.coord(i) - d;
        while c <= stop {
            coords.push(c.clone());
            c = &c + &step;
        }
        per_axis.push(coords);
    }
    let mut points = vec![RVec::zero(0)];
    for axis in per_axis {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for c in &axis {
                let mut coords = p.coords.clone();
                coords.push(c.clone());
                next.push(RVec::new(coords));
            }
        }
        points = next;
    }
    points
}

/// Bucket index over cells of side d for fast neighbor lookups; exactness is
/// unaffected because it only prunes candidates.
struct MarkerIndex {
    origin: RVec,
    cell: Rational,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    dim: usize,
}

impl MarkerIndex {
    fn new(window: &Window, d: &Rational) -> Self {
        MarkerIndex {
            origin: window.lo.clone(),
            cell: d.clone(),
            buckets: HashMap::new(),
            dim: window.dim(),
        }
    }

    fn key(&self, p: &RVec) -> Vec<i64> {
        (0..self.dim)
            .map(|i| {
                ((p.coord(i) - self.origin.coord(i)) / &self.cell)
                    .floor_int()
                    .to_i64()
                    .unwrap_or(i64::MAX)
            })
            .collect()
    }

    fn insert(&mut self, id: usize, p: &RVec) {
        self.buckets.entry(self.key(p)).or_default().push(id);
    }

    fn all_further_than(&self, p: &RVec, kept: &[RVec], d: &Rational) -> bool {
        let key = self.key(p);
        let mut neighbor = key.clone();
        self.scan(0, &key, &mut neighbor, &mut |id| kept[id].sup_dist(p) > *d)
    }

    /// True iff no indexed point lies within d of p (covering test).
    fn none_within(&self, p: &RVec, points: &[RVec], d: &Rational) -> bool {
        self.all_further_than(p, points, d)
    }

    fn scan(
        &self,
        axis: usize,
        key: &[i64],
        neighbor: &mut Vec<i64>,
        ok: &mut impl FnMut(usize) -> bool,
    ) -> bool {
        if axis == self.dim {
            if let Some(ids) = self.buckets.get(neighbor.as_slice()) {
                return ids.iter().all(|&id| ok(id));
            }
            return true;
        }
        for delta in -1..=1i64 {
            neighbor[axis] = key[axis] + delta;
            if !self.scan(axis + 1, key, neighbor, ok) {
                return false;
            }
        }
        neighbor[axis] = key[axis];
        true
    }
}

/// Exact verification report for a marker set on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerReport {
    pub discrete: bool,
    pub covering: bool,
    pub discreteness_violations: Vec<(RVec, RVec)>,
    pub uncovered: Vec<RVec>,
    pub audit_points: usize,
}

impl MarkerReport {
    pub fn ok(&self) -> bool {
        self.discrete && self.covering
    }

    pub fn violations(&self) -> usize {
        self.discreteness_violations.len() + self.uncovered.len()
    }
}

/// Checks discreteness over all pairs and covering over the interior audit
/// grid, returning witnesses for every violation. The bucket index only
/// prunes candidate pairs; every reported fact is an exact comparison.
pub fn verify_marker(window: &Window, m: &MarkerSet) -> MarkerReport {
    let mut index = MarkerIndex::new(window, &m.d);
    let mut discreteness_violations = Vec::new();
    for (i, p) in m.points.iter().enumerate() {
        if !index.all_further_than(p, &m.points, &m.d) {
            let j = m.points[..i]
                .iter()
                .position(|q| q.sup_dist(p) <= m.d)
                .expect("witness exists");
            discreteness_violations.push((m.points[j].clone(), p.clone()));
        }
        index.insert(i, p);
    }
    let audit = audit_grid(window, &m.d);
    let uncovered: Vec<RVec> = audit
        .iter()
        .filter(|p| index.none_within(p, &m.points, &m.d))
        .cloned()
        .collect();
    MarkerReport {
        discrete: discreteness_violations.is_empty(),
        covering: uncovered.is_empty(),
        audit_points: audit.len(),
        discreteness_violations,
        uncovered,
    }
}
