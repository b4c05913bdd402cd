//! Canonical bases for finitely described closed subgroups of ℝⁿ.
//!
//! A subgroup is described by generators of its vector-subspace part and
//! ℤ-generators of its discrete part. Decomposition produces the (u, v, w)
//! basis: u spans the largest vector subspace U, v is a ℤ-basis of the
//! discrete part D (lower-left HNF, so prefix supports give the bases of
//! D ∩ ℝᵏ), and w is the standard-vector complement. Membership is decided
//! exactly by solving the linear system over ℚ and checking integrality of
//! the lattice coefficients.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{common_denominator, RVec, Rational};
use crate::linalg::{hnf_lower_left, in_span, solve_columns};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StabilizerError {
    #[error("vector {index} of {family} has support beyond ambient dimension {n}")]
    DimensionMismatch {
        family: &'static str,
        index: usize,
        n: usize,
    },
    #[error("lattice generator {index} lies in the real span of the subspace part")]
    DependentLatticeGenerator { index: usize },
    #[error("discrete part is not discrete")]
    NonDiscrete,
    #[error("internal decomposition check failed: {0}")]
    InternalCheckFailed(&'static str),
}

/// Input description of a closed subgroup of ℝⁿ: generators of the
/// vector-subspace part and ℤ-generators of the discrete part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub n: usize,
    pub u_gens: Vec<RVec>,
    pub lattice_gens: Vec<RVec>,
}

/// A spec that passed `validate_spec`, together with its decomposition.
#[derive(Clone, Debug)]
pub struct ValidatedStabilizer {
    spec: StabilizerSpec,
    basis: CanonicalBasis,
}

impl ValidatedStabilizer {
    pub fn spec(&self) -> &StabilizerSpec {
        &self.spec
    }

    pub fn basis(&self) -> &CanonicalBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }
}

/// The (u, v, w) basis of a decomposed subgroup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalBasis {
    pub n: usize,
    pub u: Vec<RVec>,
    pub v: Vec<RVec>,
    pub w: Vec<RVec>,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
}

impl CanonicalBasis {
    /// The trivial subgroup of ℝⁿ: no u, no v, w = all standard vectors.
    pub fn trivial(n: usize) -> Self {
        CanonicalBasis {
            n,
            u: Vec::new(),
            v: Vec::new(),
            w: (0..n).map(|k| RVec::unit(n, k)).collect(),
            alpha: 0,
            beta: 0,
            gamma: n,
        }
    }

    /// All basis vectors in (u, v, w) order; spans ℝⁿ.
    pub fn full_family(&self) -> Vec<RVec> {
        let mut fam = self.u.clone();
        fam.extend(self.v.iter().cloned());
        fam.extend(self.w.iter().cloned());
        fam
    }
}

/// Isomorphism-type label of ℝⁿ/G ≅ 𝕋^β ⊕ ℝ^γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientType {
    pub beta: usize,
    pub gamma: usize,
}

/// Checks a spec and returns it with its decomposition attached.
///
/// Rejects generators supported beyond dimension n and lattice generators
/// lying in the real span of the subspace part (such a generator contributes
/// nothing discrete, so the described u/lattice split is inconsistent).
pub fn validate_spec(spec: &StabilizerSpec) -> Result<ValidatedStabilizer, StabilizerError> {
    let n = spec.n;
    for (index, g) in spec.u_gens.iter().enumerate() {
        if g.last_nonzero().map_or(false, |t| t >= n) {
            return Err(StabilizerError::DimensionMismatch {
                family: "u_gens",
                index,
                n,
            });
        }
    }
    for (index, g) in spec.lattice_gens.iter().enumerate() {
        if g.last_nonzero().map_or(false, |t| t >= n) {
            return Err(StabilizerError::DimensionMismatch {
                family: "lattice_gens",
                index,
                n,
            });
        }
    }

    let u = largest_subspace_basis_of(&spec.u_gens, n);
    for (index, g) in spec.lattice_gens.iter().enumerate() {
        if in_span(&u, g, n) {
            return Err(StabilizerError::DependentLatticeGenerator { index });
        }
    }

    let coords = complementary_coords(&u, n);
    let v = lattice_basis_of(&spec.lattice_gens, &u, &coords, n)?;
    let w = complement_basis(&u, &v, n);
    let basis = CanonicalBasis {
        n,
        alpha: u.len(),
        beta: v.len(),
        gamma: w.len(),
        u,
        v,
        w,
    };
    check_decomposition(spec, &basis)?;
    Ok(ValidatedStabilizer {
        spec: spec.clone(),
        basis,
    })
}

/// Decomposes a spec into its canonical basis (validating it first).
pub fn decompose(spec: &StabilizerSpec) -> Result<CanonicalBasis, StabilizerError> {
    Ok(validate_spec(spec)?.basis)
}

/// Greedy basis of U = span_ℝ(u_gens): scan in input order, keep a
/// generator iff it is not in the span of those kept so far.
pub fn largest_subspace_basis(spec: &ValidatedStabilizer) -> Vec<RVec> {
    largest_subspace_basis_of(&spec.spec.u_gens, spec.spec.n)
}

fn largest_subspace_basis_of(u_gens: &[RVec], n: usize) -> Vec<RVec> {
    let mut kept: Vec<RVec> = Vec::new();
    for g in u_gens {
        if !g.is_zero() && !in_span(&kept, g, n) {
            kept.push(g.clone());
        }
    }
    kept
}

/// Greedy complement coordinates: keep k (scanning k = 0..n) iff e_k is not
/// in span(U ∪ kept standard vectors). Indices are 0-based.
pub fn complementary_coords(u_basis: &[RVec], n: usize) -> Vec<usize> {
    let mut kept_idx: Vec<usize> = Vec::new();
    let mut family: Vec<RVec> = u_basis.to_vec();
    for k in 0..n {
        let e = RVec::unit(n, k);
        if !in_span(&family, &e, n) {
            family.push(e);
            kept_idx.push(k);
        }
    }
    kept_idx
}

/// ℤ-basis of the discrete part D = projection of span_ℤ(lattice_gens) onto
/// V = span{e_k : k ∈ coords} along U, canonicalized by lower-left HNF so the
/// vectors supported on the first k ambient coordinates are a ℤ-basis of
/// D ∩ ℝᵏ for every k.
pub fn lattice_basis(
    spec: &ValidatedStabilizer,
    u_basis: &[RVec],
    coords: &[usize],
) -> Result<Vec<RVec>, StabilizerError> {
    lattice_basis_of(&spec.spec.lattice_gens, u_basis, coords, spec.spec.n)
}

fn lattice_basis_of(
    lattice_gens: &[RVec],
    u_basis: &[RVec],
    coords: &[usize],
    n: usize,
) -> Result<Vec<RVec>, StabilizerError> {
    if lattice_gens.is_empty() {
        return Ok(Vec::new());
    }
    // Columns: u basis then the complement standard vectors; the solve is
    // unique because together they form a basis of ℝⁿ.
    let mut columns: Vec<RVec> = u_basis.to_vec();
    for &k in coords {
        columns.push(RVec::unit(n, k));
    }
    let mut projections: Vec<RVec> = Vec::new();
    for g in lattice_gens {
        let x = solve_columns(&columns, g, n)
            .ok_or(StabilizerError::InternalCheckFailed("projection solve failed"))?;
        let mut proj = RVec::zero(n);
        for (j, &k) in coords.iter().enumerate() {
            proj.coords[k] = x[u_basis.len() + j].clone();
        }
        projections.push(proj);
    }

    let denom = common_denominator(&projections);
    let scaled: Vec<Vec<BigInt>> = projections
        .iter()
        .map(|p| {
            (0..n)
                .map(|i| {
                    let c = p.coord(i) * Rational::from_bigint(denom.clone());
                    debug_assert!(c.is_integer());
                    c.numer().clone()
                })
                .collect()
        })
        .collect();
    let hnf = hnf_lower_left(scaled, n);
    let inv = Rational::from_bigint(denom).recip();
    Ok(hnf
        .into_iter()
        .map(|row| {
            RVec::new(
                row.into_iter()
                    .map(|c| Rational::from_bigint(c) * &inv)
                    .collect(),
            )
        })
        .collect())
}

/// Greedy standard-vector complement of span(u ∪ v): keep e_k (k = 0..n)
/// iff e_k ∉ span(u ∪ v ∪ kept).
pub fn complement_basis(u_basis: &[RVec], v_basis: &[RVec], n: usize) -> Vec<RVec> {
    let mut family: Vec<RVec> = u_basis.to_vec();
    family.extend(v_basis.iter().cloned());
    let mut w = Vec::new();
    for k in 0..n {
        let e = RVec::unit(n, k);
        if !in_span(&family, &e, n) {
            family.push(e.clone());
            w.push(e);
        }
    }
    w
}

/// Exact membership: is g a real combination of the u part plus an integer
/// combination of the lattice basis?
pub fn member(g: &RVec, spec: &ValidatedStabilizer) -> bool {
    member_basis(g, &spec.basis)
}

/// Membership against an already computed canonical basis.
pub fn member_basis(g: &RVec, basis: &CanonicalBasis) -> bool {
    if g.last_nonzero().map_or(false, |t| t >= basis.n) {
        return false;
    }
    let mut columns = basis.u.clone();
    columns.extend(basis.v.iter().cloned());
    match solve_columns(&columns, g, basis.n) {
        // Columns are independent, so the solution is unique when it exists.
        Some(x) => x[basis.u.len()..].iter().all(Rational::is_integer),
        None => false,
    }
}

/// The X_{β,γ} class label of the quotient ℝⁿ/G ≅ 𝕋^β ⊕ ℝ^γ.
pub fn quotient_type(basis: &CanonicalBasis) -> QuotientType {
    QuotientType {
        beta: basis.beta,
        gamma: basis.gamma,
    }
}

fn check_decomposition(
    spec: &StabilizerSpec,
    basis: &CanonicalBasis,
) -> Result<(), StabilizerError> {
    if basis.alpha + basis.beta + basis.gamma != basis.n {
        return Err(StabilizerError::InternalCheckFailed("alpha+beta+gamma != n"));
    }
    let fam = basis.full_family();
    if crate::linalg::rank(&fam, basis.n) != basis.n {
        return Err(StabilizerError::InternalCheckFailed(
            "u ∪ v ∪ w does not span ℝⁿ",
        ));
    }
    for w in &basis.w {
        let k = w.last_nonzero().expect("w vector is nonzero");
        if w.coord(k) != Rational::one() || w.coords[..k].iter().any(|c| !c.is_zero()) {
            return Err(StabilizerError::InternalCheckFailed(
                "w vector is not a standard coordinate vector",
            ));
        }
    }
    // Both directions on the generators: each input generator belongs to the
    // reconstructed group, and each basis vector belongs to the described one.
    for g in spec.u_gens.iter() {
        // A subspace generator must be a real combination of u alone.
        if !in_span(&basis.u, g, basis.n) {
            return Err(StabilizerError::InternalCheckFailed(
                "u generator missing from span(u)",
            ));
        }
    }
    for g in spec.lattice_gens.iter() {
        if !member_basis(g, basis) {
            return Err(StabilizerError::InternalCheckFailed(
                "lattice generator missing from reconstructed group",
            ));
        }
    }
    for v in basis.v.iter() {
        if !member_described(v, spec, &basis.u) {
            return Err(StabilizerError::InternalCheckFailed(
                "v basis vector missing from described group",
            ));
        }
    }
    Ok(())
}

/// Membership in the described group span_ℝ(u) + span_ℤ(lattice_gens),
/// solved directly against the (possibly dependent) input generators by
/// reducing the generators themselves.
fn member_described(g: &RVec, spec: &StabilizerSpec, u_basis: &[RVec]) -> bool {
    let coords = complementary_coords(u_basis, spec.n);
    match lattice_basis_of(&spec.lattice_gens, u_basis, &coords, spec.n) {
        Ok(v) => {
            let basis = CanonicalBasis {
                n: spec.n,
                alpha: u_basis.len(),
                beta: v.len(),
                gamma: spec.n - u_basis.len() - v.len(),
                u: u_basis.to_vec(),
                w: Vec::new(),
                v,
            };
            // w is irrelevant for membership.
            member_basis(g, &basis)
        }
        Err(_) => false,
    }
}
