//! Exact rational scalars, vectors, torus arithmetic, and the seminorm /
//! pseudometric every geometric construction sits on.
//!
//! All values are immutable after construction and all operations are pure.
//! Rationals are kept in canonical reduced form (positive denominator,
//! gcd 1) by `num_rational`; torus coordinates are reduced into [0, 1)
//! eagerly on construction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("dimension mismatch: left has dim {left}, right has dim {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid rational literal {0:?}")]
    BadLiteral(String),
}

/// Arbitrary-precision rational in canonical reduced form.
///
/// Serializes as a `"num/den"` string so JSON round-trips are exact.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Rational(BigRational::new(num, den))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Largest integer ≤ self, as a big integer.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Least integer ≥ self.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Fractional part in [0, 1): `self - floor(self)`.
    pub fn fract(&self) -> Self {
        Rational(&self.0 - BigRational::from_integer(self.0.floor().to_integer()))
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        Rational(self.0.recip())
    }

    /// Approximate value for diagnostics only; never used in any comparison.
    pub fn to_f64_lossy(&self) -> f64 {
        let n = self.numer();
        let d = self.denom();
        let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
        let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
        nf / df
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rational {
    type Err = ExactError;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self, ExactError> {
        let bad = || ExactError::BadLiteral(s.to_owned());
        match s.split_once('/') {
            Some((num, den)) => {
                let n: BigInt = num.trim().parse().map_err(|_| bad())?;
                let d: BigInt = den.trim().parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(Rational(BigRational::new(n, d)))
            }
            None => {
                let n: BigInt = s.trim().parse().map_err(|_| bad())?;
                Ok(Rational(BigRational::from_integer(n)))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
    };
}

rational_binop!(Add, add);
rational_binop!(Sub, sub);
rational_binop!(Mul, mul);
rational_binop!(Div, div);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

/// Point of ℝⁿ viewed inside ℝ^<ω: equality pads with implicit trailing
/// zeros, so `(1, 2)` and `(1, 2, 0)` are the same vector.
#[derive(Clone, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RVec {
    pub coords: Vec<Rational>,
}

impl RVec {
    pub fn new(coords: Vec<Rational>) -> Self {
        RVec { coords }
    }

    pub fn zero(dim: usize) -> Self {
        RVec {
            coords: vec![Rational::zero(); dim],
        }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        RVec {
            coords: v.iter().map(|&c| Rational::from_int(c)).collect(),
        }
    }

    /// k-th standard coordinate vector e_k (0-based) in dimension `dim`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = RVec::zero(dim);
        v.coords[k] = Rational::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, i: usize) -> Rational {
        self.coords.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Rational::is_zero)
    }

    pub fn add(&self, other: &RVec) -> RVec {
        let dim = self.dim().max(other.dim());
        RVec {
            coords: (0..dim).map(|i| self.coord(i) + other.coord(i)).collect(),
        }
    }

    pub fn sub(&self, other: &RVec) -> RVec {
        let dim = self.dim().max(other.dim());
        RVec {
            coords: (0..dim).map(|i| self.coord(i) - other.coord(i)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> RVec {
        RVec {
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    pub fn neg(&self) -> RVec {
        RVec {
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }

    /// Sup-norm ‖·‖∞.
    pub fn sup_norm(&self) -> Rational {
        self.coords
            .iter()
            .map(Rational::abs)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Sup-norm distance, padding the shorter vector with zeros.
    pub fn sup_dist(&self, other: &RVec) -> Rational {
        self.sub(other).sup_norm()
    }

    /// Index of the last nonzero coordinate, if any.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.coords.iter().rposition(|c| !c.is_zero())
    }
}

impl PartialEq for RVec {
    fn eq(&self, other: &Self) -> bool {
        let dim = self.dim().max(other.dim());
        (0..dim).all(|i| self.coord(i) == other.coord(i))
    }
}

impl std::hash::Hash for RVec {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let trimmed = match self.last_nonzero() {
            Some(i) => &self.coords[..=i],
            None => &[],
        };
        trimmed.hash(state);
    }
}

impl fmt::Debug for RVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Vector of 𝕋^a with 𝕋 viewed as [0, 1) under addition mod 1.
///
/// Construction reduces every coordinate by its floor, so stored values are
/// always canonical.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusVec {
    coords: Vec<Rational>,
}

impl TorusVec {
    /// Reduces each coordinate into [0, 1).
    pub fn new(coords: Vec<Rational>) -> Self {
        TorusVec {
            coords: coords.iter().map(Rational::fract).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        TorusVec {
            coords: vec![Rational::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Rational {
        self.coords[i].clone()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Rational::is_zero)
    }

    pub fn add(&self, other: &TorusVec) -> Result<TorusVec, ExactError> {
        if self.dim() != other.dim() {
            return Err(ExactError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(TorusVec::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// Torus inverse: coordinatewise (1 − t) mod 1.
    pub fn inverse(&self) -> TorusVec {
        TorusVec::new(self.coords.iter().map(|t| -t).collect())
    }
}

impl fmt::Debug for TorusVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{:?}", RVec::new(self.coords.clone()))
    }
}

/// Element of 𝕋^a ⊕ ℝ^b with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GroupElement {
    pub torus: TorusVec,
    pub real: RVec,
}

impl GroupElement {
    pub fn new(torus: TorusVec, real: RVec) -> Self {
        GroupElement { torus, real }
    }

    pub fn identity(torus_dim: usize, real_dim: usize) -> Self {
        GroupElement {
            torus: TorusVec::zero(torus_dim),
            real: RVec::zero(real_dim),
        }
    }

    pub fn torus_dim(&self) -> usize {
        self.torus.dim()
    }

    pub fn real_dim(&self) -> usize {
        self.real.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.torus.is_zero() && self.real.is_zero()
    }

    /// Inverse: negated real part, torus inverse (1 − t) mod 1.
    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            torus: self.torus.inverse(),
            real: self.real.neg(),
        }
    }

    /// Coordinates as one real vector: torus representatives first, then the
    /// real block. This is how a translation model consumes the element.
    pub fn flat_coords(&self) -> Vec<Rational> {
        let mut v = self.torus.coords().to_vec();
        v.extend(self.real.coords.iter().cloned());
        v
    }
}

/// Seminorm ‖(t, r)‖ = max |r_i|; the torus block is invisible to it.
pub fn seminorm(g: &GroupElement) -> Rational {
    g.real.sup_norm()
}

/// Group addition: real parts add exactly, torus parts add mod 1.
pub fn group_add(g: &GroupElement, h: &GroupElement) -> Result<GroupElement, ExactError> {
    if g.real_dim() != h.real_dim() {
        return Err(ExactError::DimensionMismatch {
            left: g.real_dim(),
            right: h.real_dim(),
        });
    }
    Ok(GroupElement {
        torus: g.torus.add(&h.torus)?,
        real: g.real.add(&h.real),
    })
}

/// Pseudometric ρ(g, h) = ‖g − h‖. May vanish for g ≠ h whose real parts
/// agree.
pub fn rho_group(g: &GroupElement, h: &GroupElement) -> Result<Rational, ExactError> {
    let diff = group_add(g, &h.inverse())?;
    Ok(seminorm(&diff))
}

/// `gcd` of two big integers, used by the lattice routines.
pub fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// Least common multiple of all coordinate denominators of the given
/// vectors; 1 for an empty family.
pub fn common_denominator(vecs: &[RVec]) -> BigInt {
    let mut l = BigInt::one();
    for v in vecs {
        for c in &v.coords {
            l = l.lcm(c.denom());
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn seminorm_takes_max_abs_of_real_part() {
        let g = GroupElement::new(
            TorusVec::new(vec![r(3, 10)]),
            RVec::from_ints(&[2, -5]),
        );
        assert_eq!(seminorm(&g), Rational::from_int(5));
    }

    #[test]
    fn seminorm_of_identity_is_zero() {
        let g = GroupElement::identity(2, 3);
        assert_eq!(seminorm(&g), Rational::zero());
    }

    #[test]
    fn seminorm_ignores_torus_part() {
        let g = GroupElement::new(TorusVec::new(vec![r(9, 10)]), RVec::new(vec![]));
        assert_eq!(seminorm(&g), Rational::zero());
    }

    #[test]
    fn group_add_wraps_torus_coordinates() {
        let g = GroupElement::new(TorusVec::new(vec![r(7, 10)]), RVec::from_ints(&[1]));
        let h = GroupElement::new(TorusVec::new(vec![r(6, 10)]), RVec::from_ints(&[2]));
        let sum = group_add(&g, &h).unwrap();
        assert_eq!(sum.torus.coord(0), r(3, 10));
        assert_eq!(sum.real, RVec::from_ints(&[3]));
    }

    #[test]
    fn group_add_identity_and_inverse() {
        let g = GroupElement::new(
            TorusVec::new(vec![r(1, 3), r(3, 4)]),
            RVec::new(vec![r(-7, 2), r(5, 1)]),
        );
        let id = GroupElement::identity(2, 2);
        assert_eq!(group_add(&g, &id).unwrap(), g);
        assert!(group_add(&g, &g.inverse()).unwrap().is_identity());
    }

    #[test]
    fn group_add_rejects_mismatched_dims() {
        let g = GroupElement::identity(1, 2);
        let h = GroupElement::identity(1, 3);
        assert!(matches!(
            group_add(&g, &h),
            Err(ExactError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rho_is_seminorm_of_difference() {
        let g = GroupElement::new(TorusVec::zero(1), RVec::from_ints(&[3]));
        let h = GroupElement::new(TorusVec::zero(1), RVec::from_ints(&[1]));
        assert_eq!(rho_group(&g, &h).unwrap(), Rational::from_int(2));
        assert_eq!(rho_group(&g, &g).unwrap(), Rational::zero());
    }

    #[test]
    fn rho_vanishes_on_torus_only_difference() {
        let g = GroupElement::new(TorusVec::new(vec![r(1, 4)]), RVec::from_ints(&[2]));
        let h = GroupElement::new(TorusVec::new(vec![r(3, 4)]), RVec::from_ints(&[2]));
        assert_eq!(rho_group(&g, &h).unwrap(), Rational::zero());
        assert_ne!(g, h);
    }

    #[test]
    fn torus_reduction_is_idempotent() {
        let t = TorusVec::new(vec![r(13, 10), r(-1, 4), r(2, 1)]);
        let again = TorusVec::new(t.coords().to_vec());
        assert_eq!(t, again);
        assert_eq!(t.coord(0), r(3, 10));
        assert_eq!(t.coord(1), r(3, 4));
        assert_eq!(t.coord(2), Rational::zero());
    }

    #[test]
    fn rvec_equality_pads_trailing_zeros() {
        let a = RVec::from_ints(&[1, 2]);
        let b = RVec::from_ints(&[1, 2, 0, 0]);
        assert_eq!(a, b);
        assert_eq!(a.sup_dist(&b), Rational::zero());
    }

    #[test]
    fn rational_string_round_trip() {
        let v = r(-22, 8);
        let s = v.to_string();
        assert_eq!(s, "-11/4");
        assert_eq!(s.parse::<Rational>().unwrap(), v);
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::from_int(7));
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn fract_lands_in_unit_interval() {
        for (n, d) in [(13, 10), (-1, 4), (7, 1), (-9, 2)] {
            let f = r(n, d).fract();
            assert!(!f.is_negative() && f < Rational::one());
        }
    }
}
