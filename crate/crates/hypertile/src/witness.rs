//! The dimension induction on finite windows: growth schedules, the
//! hierarchy of level partitions, center selection, reduction traces, and
//! eventual-agreement checking.
//!
//! Partitions here are *grid plans*, not materialized rect lists: a level-n
//! diagonal partition is a uniform grid of pitch dₙ, and each refining
//! partition is a 10·dⱼ grid whose faces are shifted away from the faces of
//! previously built grids at the same level. Everything is a pure function
//! of (window, schedule, seed, orbit data), so a region or a trace can be
//! evaluated at a point without storing the millions of cells a desk-scale
//! window at the bottom scale would need. The certificate enumerates faces
//! inside the window and checks every claimed inequality exactly.
//!
//! Class membership at level n is evaluated by the center chain: starting
//! from x, for j = 1, …, n−1 replace the point by the center of its level-j
//! cell of the n-th refinement, then read off the diagonal cell. Two points
//! are level-n related iff the chains land in the same diagonal cell, and
//! the trace entry is that cell's center.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{RVec, Rational};
use crate::marker::Window;
use crate::region::{RegionError, RegionPartition};
use crate::seq::derive_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("no schedule satisfies the separation constraints: {0}")]
    UnsatisfiableConstraints(String),
    #[error("point lies outside the window's safe interior")]
    PointOutsideSafeInterior,
    #[error("trace lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("hierarchy audit failed: {0}")]
    AuditFailed(String),
    #[error("region {0} is not a single rect")]
    RegionNotRect(usize),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// The constants driving the induction: strictly increasing scales d₁ ≪ d₂
/// ≪ …, a global ε, and the per-level face separations consumed by the
/// convergence argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epsilon: Rational,
    pub d: Vec<Rational>,
    pub separations: Vec<Rational>,
    pub growth: u64,
    pub levels: usize,
}

/// Separation fraction: the level-k separation is nominally d_k / 16, which
/// the 10·d grid shift rule (quantum 2s, budget d/2) can always realize
/// against up to three blocker faces.
const SEPARATION_DENOM: i64 = 16;

impl Schedule {
    pub fn d_at(&self, level: usize) -> &Rational {
        &self.d[level - 1]
    }

    pub fn separation_at(&self, level: usize) -> &Rational {
        &self.separations[level - 1]
    }

    /// Σ_{j<k} d_j, the prefix sum the separation bound compares against.
    pub fn prefix_sum(&self, level: usize) -> Rational {
        self.d[..level - 1]
            .iter()
            .fold(Rational::zero(), |acc, d| acc + d)
    }

    /// The separation bound at a level: 24·Σ_{j<k} d_j + 2ε.
    pub fn separation_bound(&self, level: usize) -> Rational {
        self.prefix_sum(level) * Rational::from_int(24)
            + &self.epsilon * &Rational::from_int(2)
    }

    /// Re-verifies every schedule inequality exactly.
    pub fn verify(&self) -> Result<(), WitnessError> {
        for pair in self.d.windows(2) {
            if pair[0] >= pair[1] {
                return Err(WitnessError::UnsatisfiableConstraints(
                    "scales not strictly increasing".into(),
                ));
            }
        }
        for k in 1..=self.levels {
            if self.separation_at(k) <= &self.separation_bound(k) {
                return Err(WitnessError::UnsatisfiableConstraints(format!(
                    "separation at level {k} does not exceed its bound"
                )));
            }
        }
        Ok(())
    }
}

/// Builds the schedule d₁ = base, d_{k+1} = G·d_k with G minimal such that
/// every level's nominal separation d_k/16 exceeds 24(d₁+⋯+d_{k−1}) + 2ε.
/// When ε is too large for the level-1 nominal separation, s₁ is raised to
/// just above 2ε (the base scale has no smaller scales to dominate; whether
/// that separation is realizable is the pipeline's runtime concern).
pub fn make_schedule(
    base: &Rational,
    levels: usize,
    epsilon: &Rational,
) -> Result<Schedule, WitnessError> {
    if levels == 0 {
        return Err(WitnessError::UnsatisfiableConstraints("levels must be ≥ 1".into()));
    }
    if epsilon > base || epsilon.is_zero() || epsilon.is_negative() {
        return Err(WitnessError::UnsatisfiableConstraints(
            "need 0 < epsilon <= base".into(),
        ));
    }
    let denom = Rational::from_int(SEPARATION_DENOM);
    let two_eps = epsilon * &Rational::from_int(2);

    let build = |growth: u64| -> Schedule {
        let g = Rational::from_int(growth as i64);
        let mut d = vec![base.clone()];
        for _ in 1..levels {
            let next = d.last().unwrap() * &g;
            d.push(next);
        }
        let mut schedule = Schedule {
            epsilon: epsilon.clone(),
            separations: d.iter().map(|dk| dk / &denom).collect(),
            d,
            growth,
            levels,
        };
        if schedule.separations[0] <= two_eps {
            schedule.separations[0] = &two_eps + &(base / &denom);
        }
        schedule
    };

    if levels == 1 {
        return Ok(build(2));
    }
    let mut growth = 2u64;
    loop {
        let schedule = build(growth);
        if schedule.verify().is_ok() {
            return Ok(schedule);
        }
        growth += 1;
        if growth > 4_000_000 {
            return Err(WitnessError::UnsatisfiableConstraints(
                "growth search exhausted".into(),
            ));
        }
    }
}

/// A grid plan: either the uniform diagonal grid of one level, or a shifted
/// refinement grid built against the same-level grids of earlier relations.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct GridPlan {
    /// Per-axis anchor coordinates.
    anchors: Vec<Rational>,
    pitch: Rational,
    /// Empty for uniform grids.
    blockers: Vec<(usize, usize)>,
    /// Face separation against blocker faces (shifted grids only).
    separation: Rational,
    /// Shift scan budget: d_j / 2.
    budget: Rational,
}

/// Key of a refinement grid: (target level i, working level j), j < i.
type GridKey = (usize, usize);

/// The hierarchy of level partitions over one orbit window.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub window: Window,
    pub schedule: Schedule,
    pub seed: u64,
    /// Orbit-invariant coordinates appended to every trace encoding.
    pub orbit_tail: Vec<Rational>,
    diagonals: Vec<GridPlan>,
    refinements: BTreeMap<GridKey, GridPlan>,
    pub certificate: HierarchyCertificate,
    dim: usize,
}

/// JSON-friendly description of a hierarchy's grid plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDescription {
    pub window: Window,
    pub seed: u64,
    pub orbit_tail: Vec<Rational>,
    pub schedule: Schedule,
    pub diagonals: Vec<GridDescription>,
    pub refinements: Vec<GridDescription>,
    pub certificate: HierarchyCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDescription {
    /// (target level, working level); equal entries for diagonals.
    pub level: (usize, usize),
    pub pitch: Rational,
    pub anchors: Vec<Rational>,
    pub separation: Option<Rational>,
}

/// Exact per-level audit data gathered while building a hierarchy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HierarchyCertificate {
    /// (level j, grid (i,j)) → [min, max] cell width over the window.
    pub cell_widths: Vec<(usize, usize, Rational, Rational)>,
    /// Required edge bounds per level: cells of level-j refinements must lie
    /// within [9dⱼ, 12dⱼ].
    pub cell_width_ok: bool,
    /// Max adjacent-center gap per grid vs the 12·dⱼ lift bound.
    pub adjacency: Vec<(usize, usize, Rational, Rational)>,
    pub adjacency_ok: bool,
    /// Min face distance per same-level grid pair vs the level separation.
    pub separations: Vec<(usize, usize, usize, Rational, Rational)>,
    pub separations_ok: bool,
    /// Per level: number of refinement families vs the j+1 budget.
    pub family_counts: Vec<(usize, usize, usize)>,
    pub family_counts_ok: bool,
    /// Per level: separation used vs 24·Σ d_j + 2ε.
    pub convergence_margins: Vec<(usize, Rational, Rational)>,
    pub convergence_ok: bool,
}

impl HierarchyCertificate {
    pub fn ok(&self) -> bool {
        self.cell_width_ok
            && self.adjacency_ok
            && self.separations_ok
            && self.family_counts_ok
            && self.convergence_ok
    }
}

/// Deterministic seed from an orbit's canonical data, so the construction is
/// a function of the orbit rather than of the particular representative.
pub fn orbit_seed(seed: u64, tail: &[Rational], label: (usize, usize)) -> u64 {
    let mut s = derive_seed(seed, &[0x6f72_6269, label.0 as u64, label.1 as u64]);
    for t in tail {
        for b in t.to_string().bytes() {
            s = derive_seed(s, &[b as u64]);
        }
    }
    s
}

fn dyadic_fraction(h: u64) -> Rational {
    Rational::new((h % 65536) as i64, 65536)
}

impl Hierarchy {
    fn grid(&self, key: &GridKey) -> &GridPlan {
        &self.refinements[key]
    }

    /// Face coordinate k of a grid on one axis, with its shift applied.
    fn face(&self, plan: &GridPlan, axis: usize, k: &BigInt) -> Rational {
        let nominal = &plan.anchors[axis] + &(&plan.pitch * &Rational::from_bigint(k.clone()));
        if plan.blockers.is_empty() {
            return nominal;
        }
        let twelve_d = &plan.budget * &Rational::from_int(24); // 12·d = 24·(d/2)
        let mut blockers: Vec<Rational> = Vec::new();
        for key in &plan.blockers {
            let other = self.grid(key);
            blockers.extend(self.faces_near(other, axis, &nominal, &twelve_d));
        }
        let quantum = &plan.separation * &Rational::from_int(2);
        let mut magnitude = Rational::zero();
        loop {
            for sign in [1i64, -1] {
                if sign < 0 && magnitude.is_zero() {
                    continue;
                }
                let cand = &nominal + &(&magnitude * &Rational::from_int(sign));
                if blockers
                    .iter()
                    .all(|b| (&cand - b).abs() >= plan.separation)
                {
                    return cand;
                }
            }
            magnitude = &magnitude + &quantum;
            if magnitude > plan.budget {
                // Infeasibility surfaces through the build-time audit; a
                // stuck face keeps its nominal position there.
                return nominal;
            }
        }
    }

    /// All faces of a grid on an axis within distance `radius` of `around`.
    fn faces_near(
        &self,
        plan: &GridPlan,
        axis: usize,
        around: &Rational,
        radius: &Rational,
    ) -> Vec<Rational> {
        let lo = around - radius - &plan.budget;
        let hi = around + radius + &plan.budget;
        let k_lo = ((&lo - &plan.anchors[axis]) / &plan.pitch).floor_int();
        let k_hi = ((&hi - &plan.anchors[axis]) / &plan.pitch).ceil_int();
        let mut out = Vec::new();
        let mut k = k_lo;
        while k <= k_hi {
            let f = self.face(plan, axis, &k);
            if &(&f - around).abs() <= radius {
                out.push(f);
            }
            k += 1;
        }
        out
    }

    /// Index of the cell of `plan` containing coordinate x on an axis.
    fn cell_index(&self, plan: &GridPlan, axis: usize, x: &Rational) -> BigInt {
        let mut k = ((x - &plan.anchors[axis]) / &plan.pitch).floor_int();
        // Shifts are below pitch/2, so the true cell is within one step.
        loop {
            let lo = self.face(plan, axis, &k);
            if x < &lo {
                k -= 1;
                continue;
            }
            let hi = self.face(plan, axis, &(k.clone() + 1));
            if x >= &hi {
                k += 1;
                continue;
            }
            return k;
        }
    }

    /// Center of the cell with the given per-axis indices.
    fn cell_center(&self, plan: &GridPlan, idx: &[BigInt]) -> RVec {
        let half = Rational::new(1, 2);
        RVec::new(
            idx.iter()
                .enumerate()
                .map(|(axis, k)| {
                    let lo = self.face(plan, axis, k);
                    let hi = self.face(plan, axis, &(k.clone() + 1));
                    (lo + hi) * &half
                })
                .collect(),
        )
    }

    /// The center chain for level n: z₁ = x, z_{j+1} = center of z_j's cell
    /// in the (n, j) refinement; returns z_n.
    fn chain(&self, x: &RVec, n: usize) -> RVec {
        let mut z = RVec::new((0..self.dim).map(|i| x.coord(i)).collect());
        for j in 1..n {
            let plan = self.grid(&(n, j));
            let idx: Vec<BigInt> = (0..self.dim)
                .map(|axis| self.cell_index(plan, axis, &z.coords[axis]))
                .collect();
            z = self.cell_center(plan, &idx);
        }
        z
    }

    /// Diagonal cell indices identifying x's level-n class.
    pub fn level_class(&self, x: &RVec, n: usize) -> Vec<BigInt> {
        let z = self.chain(x, n);
        let plan = &self.diagonals[n - 1];
        (0..self.dim)
            .map(|axis| ((&z.coords[axis] - &plan.anchors[axis]) / &plan.pitch).floor_int())
            .collect()
    }

    /// The level-n selector value: the center of the diagonal cell the chain
    /// lands in (torus fiber zero by the selector convention).
    pub fn phi(&self, x: &RVec, n: usize) -> RVec {
        let idx = self.level_class(&x.clone(), n);
        let plan = &self.diagonals[n - 1];
        let half = Rational::new(1, 2);
        RVec::new(
            idx.iter()
                .enumerate()
                .map(|(axis, k)| {
                    let lo =
                        &plan.anchors[axis] + &(&plan.pitch * &Rational::from_bigint(k.clone()));
                    let hi = &lo + &plan.pitch;
                    (lo + hi) * &half
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.schedule.levels
    }

    /// Serializable description of the grid plans and certificate.
    pub fn describe(&self) -> HierarchyDescription {
        HierarchyDescription {
            window: self.window.clone(),
            seed: self.seed,
            orbit_tail: self.orbit_tail.clone(),
            schedule: self.schedule.clone(),
            diagonals: self
                .diagonals
                .iter()
                .enumerate()
                .map(|(i, p)| GridDescription {
                    level: (i + 1, i + 1),
                    pitch: p.pitch.clone(),
                    anchors: p.anchors.clone(),
                    separation: None,
                })
                .collect(),
            refinements: self
                .refinements
                .iter()
                .map(|(key, p)| GridDescription {
                    level: *key,
                    pitch: p.pitch.clone(),
                    anchors: p.anchors.clone(),
                    separation: Some(p.separation.clone()),
                })
                .collect(),
            certificate: self.certificate.clone(),
        }
    }

    /// Bound such that points farther than it from every level-n diagonal
    /// face are guaranteed to share their level-n class with everything
    /// within distance r: chain drift ≤ 6·Σ_{j<n} dⱼ per point plus one
    /// adjacent-cell gap of 11·d_{n−1}, so 17·Σ_{j<n} dⱼ + r dominates.
    pub fn guarantee_radius(&self, n: usize, r: &Rational) -> Rational {
        let drift = self.schedule.prefix_sum(n) * Rational::from_int(17);
        drift + r
    }

    /// Distance from x to the nearest level-n diagonal face.
    pub fn diagonal_face_distance(&self, x: &RVec, n: usize) -> Rational {
        let plan = &self.diagonals[n - 1];
        let mut best: Option<Rational> = None;
        for axis in 0..self.dim {
            let k = ((&x.coord(axis) - &plan.anchors[axis]) / &plan.pitch).floor_int();
            for kk in [k.clone(), k + 1] {
                let f = &plan.anchors[axis] + &(&plan.pitch * &Rational::from_bigint(kk));
                let dist = (&x.coord(axis) - &f).abs();
                best = Some(match best.take() {
                    None => dist,
                    Some(b) => b.min(dist),
                });
            }
        }
        best.unwrap_or_else(Rational::zero)
    }
}

/// Builds the hierarchy over a window: diagonal grids at every scale, then
/// for each target level the refinement grids from the working level up,
/// each built against the same-level grids of earlier targets. The full
/// certificate is computed before returning; any violated clause aborts.
pub fn build_hierarchy(
    window: &Window,
    schedule: &Schedule,
    seed: u64,
    orbit_tail: &[Rational],
) -> Result<Hierarchy, WitnessError> {
    schedule.verify()?;
    let dim = window.dim();
    let levels = schedule.levels;
    let d_top = schedule.d_at(levels);
    let four = Rational::from_int(4);
    for i in 0..dim {
        if window.edge(i) < &four * d_top {
            return Err(WitnessError::AuditFailed(format!(
                "window edge {i} shorter than 4·d_N"
            )));
        }
    }

    let mut diagonals = Vec::with_capacity(levels);
    for n in 1..=levels {
        let pitch = schedule.d_at(n).clone();
        let anchors = (0..dim)
            .map(|axis| {
                let h = derive_seed(seed, &[0xd1a6, n as u64, axis as u64]);
                window.lo.coord(axis) + dyadic_fraction(h) * &pitch
            })
            .collect();
        diagonals.push(GridPlan {
            anchors,
            pitch,
            blockers: Vec::new(),
            separation: Rational::zero(),
            budget: Rational::zero(),
        });
    }

    let mut refinements: BTreeMap<GridKey, GridPlan> = BTreeMap::new();
    for i in 2..=levels {
        for j in (1..i).rev() {
            let d_j = schedule.d_at(j);
            let pitch = d_j * &Rational::from_int(10);
            let anchors = (0..dim)
                .map(|axis| {
                    let h = derive_seed(seed, &[0x7e5e, i as u64, j as u64, axis as u64]);
                    window.lo.coord(axis) + dyadic_fraction(h) * &pitch
                })
                .collect();
            let blockers: Vec<GridKey> = (j + 1..i).map(|k| (k, j)).collect();
            refinements.insert(
                (i, j),
                GridPlan {
                    anchors,
                    pitch,
                    blockers,
                    separation: schedule.separation_at(j).clone(),
                    budget: d_j / &Rational::from_int(2),
                },
            );
        }
    }

    let mut h = Hierarchy {
        window: window.clone(),
        schedule: schedule.clone(),
        seed,
        orbit_tail: orbit_tail.to_vec(),
        diagonals,
        refinements,
        certificate: HierarchyCertificate::default(),
        dim,
    };
    h.certificate = audit_hierarchy(&h)?;
    if !h.certificate.ok() {
        return Err(WitnessError::AuditFailed(
            "certificate has violated clauses".into(),
        ));
    }
    Ok(h)
}

/// Enumerates one grid's face coordinates per axis across the window.
fn window_faces(h: &Hierarchy, plan: &GridPlan) -> Vec<Vec<Rational>> {
    (0..h.dim)
        .map(|axis| {
            let lo = h.window.lo.coord(axis);
            let hi = h.window.hi.coord(axis);
            let k_lo = ((&lo - &plan.anchors[axis]) / &plan.pitch).floor_int();
            let k_hi = ((&hi - &plan.anchors[axis]) / &plan.pitch).ceil_int();
            let mut faces = Vec::new();
            let mut k = k_lo;
            while k <= k_hi {
                faces.push(h.face(plan, axis, &k));
                k += 1;
            }
            faces
        })
        .collect()
}

fn audit_hierarchy(h: &Hierarchy) -> Result<HierarchyCertificate, WitnessError> {
    let mut cert = HierarchyCertificate {
        cell_width_ok: true,
        adjacency_ok: true,
        separations_ok: true,
        family_counts_ok: true,
        convergence_ok: true,
        ..Default::default()
    };
    let levels = h.schedule.levels;

    // Cell widths and adjacent-center gaps per refinement grid.
    let mut faces_of: BTreeMap<GridKey, Vec<Vec<Rational>>> = BTreeMap::new();
    for (key, plan) in &h.refinements {
        faces_of.insert(*key, window_faces(h, plan));
    }
    for (key, faces) in &faces_of {
        let (i, j) = *key;
        let d_j = h.schedule.d_at(j);
        let nine = d_j * &Rational::from_int(9);
        let twelve = d_j * &Rational::from_int(12);
        let mut min_w: Option<Rational> = None;
        let mut max_w: Option<Rational> = None;
        let mut max_gap: Option<Rational> = None;
        for axis_faces in faces {
            for w in axis_faces.windows(2) {
                let width = &w[1] - &w[0];
                min_w = Some(match min_w.take() {
                    None => width.clone(),
                    Some(m) => m.min(width.clone()),
                });
                max_w = Some(match max_w.take() {
                    None => width.clone(),
                    Some(m) => m.max(width.clone()),
                });
            }
            for w in axis_faces.windows(3) {
                // Adjacent cell centers: midpoints of consecutive cells.
                let gap = (&w[2] - &w[0]) * &Rational::new(1, 2);
                max_gap = Some(match max_gap.take() {
                    None => gap.clone(),
                    Some(m) => m.max(gap.clone()),
                });
            }
        }
        if let (Some(min_w), Some(max_w)) = (min_w, max_w) {
            if min_w < nine || max_w > twelve {
                cert.cell_width_ok = false;
            }
            cert.cell_widths.push((i, j, min_w, max_w));
        }
        if let Some(gap) = max_gap {
            if gap > twelve {
                cert.adjacency_ok = false;
            }
            cert.adjacency.push((i, j, gap, twelve.clone()));
        }
    }

    // Same-level pairwise face separation, swept exactly.
    for j in 1..levels {
        let sep = h.schedule.separation_at(j);
        let keys: Vec<GridKey> = faces_of.keys().copied().filter(|(_, jj)| *jj == j).collect();
        for a in 0..keys.len() {
            for b in a + 1..keys.len() {
                let mut min_dist: Option<Rational> = None;
                for axis in 0..h.dim {
                    let fa = &faces_of[&keys[a]][axis];
                    let fb = &faces_of[&keys[b]][axis];
                    if let Some(d) = min_pair_distance(fa, fb) {
                        min_dist = Some(match min_dist.take() {
                            None => d,
                            Some(m) => m.min(d),
                        });
                    }
                }
                if let Some(min_dist) = min_dist {
                    if &min_dist < sep {
                        cert.separations_ok = false;
                    }
                    cert.separations.push((
                        j,
                        keys[a].0,
                        keys[b].0,
                        min_dist,
                        sep.clone(),
                    ));
                }
            }
        }
    }

    // Family count per level vs the j+1 budget.
    for j in 1..levels {
        let families = faces_of.keys().filter(|(_, jj)| *jj == j).count();
        if families > j + 1 {
            cert.family_counts_ok = false;
        }
        cert.family_counts.push((j, families, j + 1));
    }

    // Convergence margins: separation vs 24·Σ + 2ε per level.
    for k in 1..=levels {
        let bound = h.schedule.separation_bound(k);
        let sep = h.schedule.separation_at(k).clone();
        if sep <= bound {
            cert.convergence_ok = false;
        }
        cert.convergence_margins.push((k, sep, bound));
    }
    Ok(cert)
}

/// Minimum |a − b| over two sorted coordinate lists (merge sweep).
fn min_pair_distance(a: &[Rational], b: &[Rational]) -> Option<Rational> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut best: Option<Rational> = None;
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        let d = (&a[i] - &b[j]).abs();
        best = Some(match best.take() {
            None => d,
            Some(m) => m.min(d),
        });
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

/// The trace of a point: selector values φ₁(x), …, φ_N(x) and their
/// injective encodings (orbit tail folded in).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub point: RVec,
    pub phi: Vec<RVec>,
    pub encoded: Vec<Rational>,
    pub label: Option<(usize, usize)>,
}

/// Computes the trace of x through every level of the hierarchy. The point
/// must lie inside the window by a d_N margin.
pub fn trace(x: &RVec, h: &Hierarchy) -> Result<ReductionTrace, WitnessError> {
    let margin = h.schedule.d_at(h.schedule.levels);
    if !h.window.is_interior(x, margin) {
        return Err(WitnessError::PointOutsideSafeInterior);
    }
    let mut phi = Vec::with_capacity(h.schedule.levels);
    let mut encoded = Vec::with_capacity(h.schedule.levels);
    for n in 1..=h.schedule.levels {
        let p = h.phi(x, n);
        let mut items: Vec<Rational> = p.coords.clone();
        items.extend(h.orbit_tail.iter().cloned());
        encoded.push(encode_rationals(&items));
        phi.push(p);
    }
    Ok(ReductionTrace {
        point: x.clone(),
        phi,
        encoded,
        label: None,
    })
}

/// Least n (1-based) such that the traces agree at every index ≥ n, or
/// `None` when no suffix agrees.
pub fn eventual_agreement(
    a: &ReductionTrace,
    b: &ReductionTrace,
) -> Result<Option<usize>, WitnessError> {
    if a.encoded.len() != b.encoded.len() {
        return Err(WitnessError::LengthMismatch {
            left: a.encoded.len(),
            right: b.encoded.len(),
        });
    }
    let len = a.encoded.len();
    let mut from = None;
    for idx in (0..len).rev() {
        if a.encoded[idx] != b.encoded[idx] {
            break;
        }
        from = Some(idx + 1);
    }
    Ok(from)
}

/// Re-encodes each entry with the class label folded in, so traces from
/// different classes never eventually agree.
pub fn tag_trace(t: &ReductionTrace, label: (usize, usize)) -> ReductionTrace {
    let tag = [
        Rational::from_int(label.0 as i64),
        Rational::from_int(label.1 as i64),
    ];
    ReductionTrace {
        point: t.point.clone(),
        phi: t.phi.clone(),
        encoded: t
            .encoded
            .iter()
            .map(|e| {
                let items = [tag[0].clone(), tag[1].clone(), e.clone()];
                encode_rationals(&items)
            })
            .collect(),
        label: Some(label),
    }
}

/// Center selector for a materialized partition: the region must be a single
/// rect; the center has every real coordinate at the rect midpoint (the
/// torus fiber of a selector value is zero by convention).
pub fn center_of_region(
    partition: &RegionPartition,
    region_id: usize,
) -> Result<RVec, WitnessError> {
    let region = partition
        .regions
        .iter()
        .find(|r| r.id == region_id)
        .ok_or(WitnessError::RegionNotRect(region_id))?;
    if region.rects.len() != 1 {
        return Err(WitnessError::RegionNotRect(region_id));
    }
    Ok(region.rects[0].center())
}

/// Selector state for a rect center: zero torus fiber.
pub fn selector_state(center: &RVec, fiber_dim: usize) -> crate::action::TorusState {
    crate::action::TorusState::new(center.clone(), crate::exact::TorusVec::zero(fiber_dim))
}

/// Injective encoding of a rational list into one rational: each item's
/// continued-fraction digits, digit lists joined with separators, the byte
/// string folded into an integer. Distinct lists give distinct values.
pub fn encode_rationals(items: &[Rational]) -> Rational {
    let mut text = String::new();
    for (i, r) in items.iter().enumerate() {
        if i > 0 {
            text.push(';');
        }
        for (k, digit) in continued_fraction(r).iter().enumerate() {
            if k > 0 {
                text.push(',');
            }
            text.push_str(&digit.to_string());
        }
    }
    let mut acc = BigInt::from(1);
    for byte in text.bytes() {
        acc = acc * BigInt::from(256) + BigInt::from(byte);
    }
    Rational::from_bigint(acc)
}

/// Finite continued fraction of a rational: [a₀; a₁, …] by the Euclidean
/// algorithm (canonical: every partial quotient after a₀ is ≥ 1, the last is
/// ≥ 2 unless the expansion has length 1).
pub fn continued_fraction(r: &Rational) -> Vec<BigInt> {
    let mut digits = Vec::new();
    let mut x = r.clone();
    loop {
        let a = x.floor_int();
        digits.push(a.clone());
        let frac = &x - &Rational::from_bigint(a);
        if frac.is_zero() {
            break;
        }
        x = frac.recip();
    }
    // Normalize [..., a, 1] to [..., a+1] so the expansion is canonical.
    if digits.len() > 1 && digits.last() == Some(&BigInt::from(1)) {
        digits.pop();
        let last = digits.last_mut().unwrap();
        *last += 1;
    }
    digits
}

/// Per-pair convergence certificate: which levels agree, whether the
/// guaranteed-agreement radius applied, and the pigeonhole bound on the
/// number of disagreeing levels above each separated level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCertificate {
    pub distance: Rational,
    pub agrees: Vec<bool>,
    /// Levels where the point was in the guaranteed-agreement zone.
    pub guaranteed: Vec<bool>,
    pub guarantee_violations: usize,
    pub pigeonhole_violations: usize,
}

/// Checks one same-orbit pair against the convergence mechanisms. Exact.
pub fn certify_pair(
    h: &Hierarchy,
    x: &RVec,
    y: &RVec,
) -> Result<PairCertificate, WitnessError> {
    let r = x.sup_dist(y);
    let levels = h.schedule.levels;
    let mut agrees = Vec::with_capacity(levels);
    let mut guaranteed = Vec::with_capacity(levels);
    let mut guarantee_violations = 0usize;
    for n in 1..=levels {
        let same = h.level_class(x, n) == h.level_class(y, n);
        let dist = h.diagonal_face_distance(x, n);
        let zone = dist > h.guarantee_radius(n, &r);
        if zone && !same {
            guarantee_violations += 1;
        }
        agrees.push(same);
        guaranteed.push(zone);
    }
    // Pigeonhole: when s_k > 2·lift_k + r, at most dim levels above k may
    // disagree (two of the lifted level-k faces would otherwise be parallel
    // and closer than the audited separation).
    let mut pigeonhole_violations = 0usize;
    for k in 1..levels {
        let lift = {
            let mut acc = Rational::zero();
            for j in 1..k {
                acc = acc + h.schedule.d_at(j) * &Rational::from_int(6);
            }
            acc + h.schedule.d_at(k) * &Rational::from_int(11)
        };
        let threshold = lift * Rational::from_int(2) + &r;
        if h.schedule.separation_at(k) > &threshold {
            let disagreeing = (k + 1..=levels).filter(|&n| !agrees[n - 1]).count();
            if disagreeing > h.dim() {
                pigeonhole_violations += 1;
            }
        }
    }
    Ok(PairCertificate {
        distance: r,
        agrees,
        guaranteed,
        guarantee_violations,
        pigeonhole_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ri(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn schedule_example_levels_3() {
        let s = make_schedule(&ri(1), 3, &r(1, 2)).unwrap();
        s.verify().unwrap();
        // Re-verify the inequality from the returned values.
        for k in 1..=3 {
            assert!(s.separation_at(k) > &s.separation_bound(k));
        }
        assert!(s.d[0] < s.d[1] && s.d[1] < s.d[2]);
    }

    #[test]
    fn schedule_single_level() {
        let s = make_schedule(&ri(1), 1, &r(1, 4)).unwrap();
        assert_eq!(s.d.len(), 1);
        s.verify().unwrap();
    }

    #[test]
    fn schedule_is_deterministic_and_growth_minimal() {
        let a = make_schedule(&ri(2), 3, &r(1, 8)).unwrap();
        let b = make_schedule(&ri(2), 3, &r(1, 8)).unwrap();
        assert_eq!(a, b);
        // One step smaller growth must fail verification.
        let smaller = Schedule {
            epsilon: a.epsilon.clone(),
            d: {
                let g = Rational::from_int(a.growth as i64 - 1);
                let mut d = vec![ri(2)];
                for _ in 1..3 {
                    let next = d.last().unwrap() * &g;
                    d.push(next);
                }
                d
            },
            separations: {
                let g = Rational::from_int(a.growth as i64 - 1);
                let mut d = vec![ri(2)];
                for _ in 1..3 {
                    let next = d.last().unwrap() * &g;
                    d.push(next);
                }
                d.iter().map(|x| x / &ri(16)).collect()
            },
            growth: a.growth - 1,
            levels: 3,
        };
        assert!(smaller.verify().is_err());
    }

    #[test]
    fn schedule_rejects_bad_epsilon() {
        assert!(make_schedule(&ri(1), 2, &ri(2)).is_err());
        assert!(make_schedule(&ri(1), 0, &r(1, 2)).is_err());
    }

    fn small_hierarchy(dim: usize) -> Hierarchy {
        let schedule = make_schedule(&ri(1), 2, &r(1, 64)).unwrap();
        let edge = &schedule.d[1] * &ri(6);
        let window = Window::new(
            RVec::zero(dim),
            RVec::new(vec![edge.clone(); dim]),
        )
        .unwrap();
        build_hierarchy(&window, &schedule, 9, &[]).unwrap()
    }

    #[test]
    fn hierarchy_level_1_is_diagonal_partition() {
        let h = small_hierarchy(1);
        // Two points in the same d₁ cell share the level-1 class.
        let d1 = h.schedule.d_at(1).clone();
        let base = &h.window.lo.coord(0) + &(&d1 * &ri(100));
        let x = RVec::new(vec![base.clone()]);
        let near = RVec::new(vec![base + &d1 * &r(1, 4)]);
        // Same cell or adjacent; at least classes are well-defined and
        // deterministic.
        assert_eq!(h.level_class(&x, 1), h.level_class(&x, 1));
        let _ = h.level_class(&near, 1);
    }

    #[test]
    fn hierarchy_certificate_passes() {
        for dim in [1, 2] {
            let h = small_hierarchy(dim);
            assert!(h.certificate.ok());
            for (_, _, min_w, max_w) in &h.certificate.cell_widths {
                assert!(min_w <= max_w);
            }
        }
    }

    #[test]
    fn single_level_hierarchy_is_one_diagonal_partition() {
        let schedule = make_schedule(&ri(1), 1, &r(1, 64)).unwrap();
        let window = Window::from_ints(&[0], &[40]);
        let h = build_hierarchy(&window, &schedule, 3, &[]).unwrap();
        assert!(h.certificate.ok());
        assert!(h.certificate.cell_widths.is_empty(), "no refinements");
        let x = RVec::new(vec![ri(20)]);
        let t = trace(&x, &h).unwrap();
        assert_eq!(t.phi.len(), 1);
        // Level-1 classes are the d₁ cells themselves.
        let class = h.level_class(&x, 1);
        let near = RVec::new(vec![ri(20) + r(1, 8)]);
        let same = h.level_class(&near, 1) == class;
        assert_eq!(same, h.phi(&x, 1) == h.phi(&near, 1));
    }

    #[test]
    fn hierarchy_determinism() {
        let schedule = make_schedule(&ri(1), 2, &r(1, 64)).unwrap();
        let edge = &schedule.d[1] * &ri(6);
        let window = Window::new(RVec::zero(1), RVec::new(vec![edge])).unwrap();
        let a = build_hierarchy(&window, &schedule, 13, &[]).unwrap();
        let b = build_hierarchy(&window, &schedule, 13, &[]).unwrap();
        let x = RVec::new(vec![&window.hi.coord(0) * &r(1, 2)]);
        assert_eq!(trace(&x, &a).unwrap(), trace(&x, &b).unwrap());
    }

    #[test]
    fn trace_requires_safe_interior() {
        let h = small_hierarchy(1);
        let outside = RVec::new(vec![h.window.lo.coord(0) + r(1, 2)]);
        assert!(matches!(
            trace(&outside, &h),
            Err(WitnessError::PointOutsideSafeInterior)
        ));
    }

    #[test]
    fn trace_fixed_point_of_selection() {
        let h = small_hierarchy(1);
        let mid = RVec::new(vec![&h.window.hi.coord(0) * &r(1, 2)]);
        let t = trace(&mid, &h).unwrap();
        // φₙ of a selector value at the same level is itself.
        for n in 1..=h.levels() {
            let again = h.phi(&t.phi[n - 1], n);
            assert_eq!(again, t.phi[n - 1]);
        }
    }

    #[test]
    fn same_region_points_share_phi() {
        let h = small_hierarchy(1);
        let mid = &h.window.hi.coord(0) * &r(1, 2);
        let x = RVec::new(vec![mid.clone()]);
        // Tiny offset: far from every face at both levels by construction of
        // the dyadic anchors, so the class is stable.
        let y = RVec::new(vec![mid + r(1, 1000)]);
        for n in 1..=h.levels() {
            if h.level_class(&x, n) == h.level_class(&y, n) {
                assert_eq!(h.phi(&x, n), h.phi(&y, n));
            }
        }
    }

    #[test]
    fn eventual_agreement_cases() {
        let h = small_hierarchy(1);
        let mid = RVec::new(vec![&h.window.hi.coord(0) * &r(1, 2)]);
        let t = trace(&mid, &h).unwrap();
        assert_eq!(eventual_agreement(&t, &t).unwrap(), Some(1));

        let mut other = t.clone();
        for e in other.encoded.iter_mut() {
            *e = &*e + &ri(1);
        }
        assert_eq!(eventual_agreement(&t, &other).unwrap(), None);

        let mut half = t.clone();
        half.encoded[0] = &half.encoded[0] + &ri(1);
        assert_eq!(eventual_agreement(&t, &half).unwrap(), Some(2));
    }

    #[test]
    fn tagging_separates_classes() {
        let h = small_hierarchy(1);
        let mid = RVec::new(vec![&h.window.hi.coord(0) * &r(1, 2)]);
        let t = trace(&mid, &h).unwrap();
        let a = tag_trace(&t, (1, 0));
        let b = tag_trace(&t, (0, 1));
        assert_eq!(eventual_agreement(&a, &b).unwrap(), None);
        let c = tag_trace(&t, (1, 0));
        assert_eq!(eventual_agreement(&a, &c).unwrap(), Some(1));
    }

    #[test]
    fn encoding_is_injective_on_samples() {
        let mut seen = std::collections::HashSet::new();
        for n in -20..20i64 {
            for d in 1..8i64 {
                let v = encode_rationals(&[r(n, d), r(d, 3)]);
                assert!(seen.insert(v.to_string()), "collision at {n}/{d}");
            }
        }
        // Concatenation boundaries do not collide.
        let a = encode_rationals(&[ri(12)]);
        let b = encode_rationals(&[ri(1), ri(2)]);
        assert_ne!(a, b);
    }

    #[test]
    fn continued_fraction_examples() {
        assert_eq!(continued_fraction(&ri(3)), vec![BigInt::from(3)]);
        // 7/3 = [2; 3]
        assert_eq!(
            continued_fraction(&r(7, 3)),
            vec![BigInt::from(2), BigInt::from(3)]
        );
        // 1/2 = [0; 2]
        assert_eq!(
            continued_fraction(&r(1, 2)),
            vec![BigInt::from(0), BigInt::from(2)]
        );
        // Canonical form never ends in 1 (except the single digit case).
        for n in 1..30i64 {
            for d in 1..30i64 {
                let cf = continued_fraction(&r(n, d));
                if cf.len() > 1 {
                    assert!(cf.last().unwrap() > &BigInt::from(1));
                }
            }
        }
    }

    #[test]
    fn center_of_region_midpoint() {
        use crate::region::{Rect, Region};
        let part = RegionPartition {
            window: Window::from_ints(&[0, 0], &[10, 10]),
            regions: vec![Region {
                id: 0,
                rects: vec![Rect::new(0, RVec::from_ints(&[0, 2]), RVec::from_ints(&[10, 4]))],
            }],
        };
        let c = center_of_region(&part, 0).unwrap();
        assert_eq!(c, RVec::new(vec![ri(5), ri(3)]));
        // Equidistance from parallel faces.
        assert_eq!(&c.coord(0) - &ri(0), &ri(10) - &c.coord(0));
        let s = selector_state(&c, 2);
        assert!(s.fiber.is_zero());
    }

    #[test]
    fn pair_certificate_close_points() {
        let h = small_hierarchy(1);
        let mid = &h.window.hi.coord(0) * &r(1, 2);
        let x = RVec::new(vec![mid.clone()]);
        let y = RVec::new(vec![mid + r(1, 2)]);
        let cert = certify_pair(&h, &x, &y).unwrap();
        assert_eq!(cert.guarantee_violations, 0);
        assert_eq!(cert.pigeonhole_violations, 0);
    }
}
