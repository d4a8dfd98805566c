//! Dual numbers, dual quaternions and the dual-quaternion vector 2-norm.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{CalibError, Result};
use crate::quat::Quaternion;

/// Norms at or below this value are treated as exact zeros when choosing the
/// branch of [`dq_magnitude`] and [`dqvec_norm`].
pub const ZERO_TOL: f64 = 1e-12;
/// Default tolerance for the two unit dual quaternion conditions.
pub const UNIT_DQ_TOL: f64 = 1e-8;

/// `standard + infinitesimal ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualNumber {
    pub standard: f64,
    pub infinitesimal: f64,
}

impl DualNumber {
    pub const ZERO: DualNumber = DualNumber::new(0.0, 0.0);
    pub const ONE: DualNumber = DualNumber::new(1.0, 0.0);

    pub const fn new(standard: f64, infinitesimal: f64) -> Self {
        Self {
            standard,
            infinitesimal,
        }
    }

    pub fn abs(&self) -> Self {
        dn_abs(self)
    }
}

impl fmt::Display for DualNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.standard, self.infinitesimal)
    }
}

impl Add for DualNumber {
    type Output = DualNumber;
    fn add(self, r: DualNumber) -> DualNumber {
        DualNumber::new(self.standard + r.standard, self.infinitesimal + r.infinitesimal)
    }
}

impl Sub for DualNumber {
    type Output = DualNumber;
    fn sub(self, r: DualNumber) -> DualNumber {
        DualNumber::new(self.standard - r.standard, self.infinitesimal - r.infinitesimal)
    }
}

impl Neg for DualNumber {
    type Output = DualNumber;
    fn neg(self) -> DualNumber {
        DualNumber::new(-self.standard, -self.infinitesimal)
    }
}

impl Mul for DualNumber {
    type Output = DualNumber;
    fn mul(self, r: DualNumber) -> DualNumber {
        DualNumber::new(
            self.standard * r.standard,
            self.standard * r.infinitesimal + self.infinitesimal * r.standard,
        )
    }
}

impl PartialOrd for DualNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.standard.partial_cmp(&other.standard)? {
            Ordering::Equal => self.infinitesimal.partial_cmp(&other.infinitesimal),
            ord => Some(ord),
        }
    }
}

/// Lexicographic total order: the standard part dominates and the
/// infinitesimal part breaks ties. NaN components fall back to
/// [`f64::total_cmp`].
pub fn dn_compare(p: &DualNumber, q: &DualNumber) -> Ordering {
    let cmp = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b));
    cmp(p.standard, q.standard).then_with(|| cmp(p.infinitesimal, q.infinitesimal))
}

/// `|q|`: `|q_st| + sgn(q_st) q_I ε` if `q_st ≠ 0`, else `|q_I| ε`.
pub fn dn_abs(q: &DualNumber) -> DualNumber {
    if q.standard != 0.0 {
        DualNumber::new(q.standard.abs(), q.standard.signum() * q.infinitesimal)
    } else {
        DualNumber::new(0.0, q.infinitesimal.abs())
    }
}

/// `standard + infinitesimal ε` with quaternion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualQuaternion {
    pub standard: Quaternion,
    pub infinitesimal: Quaternion,
}

impl DualQuaternion {
    pub const ZERO: DualQuaternion = DualQuaternion::new(Quaternion::ZERO, Quaternion::ZERO);
    pub const ONE: DualQuaternion = DualQuaternion::new(Quaternion::ONE, Quaternion::ZERO);

    pub const fn new(standard: Quaternion, infinitesimal: Quaternion) -> Self {
        Self {
            standard,
            infinitesimal,
        }
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.standard.conjugate(), self.infinitesimal.conjugate())
    }

    pub fn magnitude(&self) -> DualNumber {
        dq_magnitude(self)
    }

    /// `Sc(q_st* q_I)`, which vanishes for unit dual quaternions.
    pub fn unit_cross_term(&self) -> f64 {
        self.standard.dot(&self.infinitesimal)
    }
}

impl Add for DualQuaternion {
    type Output = DualQuaternion;
    fn add(self, r: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.standard + r.standard, self.infinitesimal + r.infinitesimal)
    }
}

impl Sub for DualQuaternion {
    type Output = DualQuaternion;
    fn sub(self, r: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.standard - r.standard, self.infinitesimal - r.infinitesimal)
    }
}

impl Neg for DualQuaternion {
    type Output = DualQuaternion;
    fn neg(self) -> DualQuaternion {
        DualQuaternion::new(-self.standard, -self.infinitesimal)
    }
}

impl Mul for DualQuaternion {
    type Output = DualQuaternion;
    fn mul(self, q: DualQuaternion) -> DualQuaternion {
        dq_multiply(&self, &q)
    }
}

pub fn dq_multiply(p: &DualQuaternion, q: &DualQuaternion) -> DualQuaternion {
    DualQuaternion::new(
        p.standard * q.standard,
        p.standard * q.infinitesimal + p.infinitesimal * q.standard,
    )
}

/// `|q_st| + Sc(q_st* q_I)/|q_st| ε`, or `|q_I| ε` when the standard part is
/// (numerically) zero.
pub fn dq_magnitude(q: &DualQuaternion) -> DualNumber {
    let st = q.standard.magnitude();
    if st > ZERO_TOL {
        DualNumber::new(st, q.standard.dot(&q.infinitesimal) / st)
    } else {
        DualNumber::new(0.0, q.infinitesimal.magnitude())
    }
}

/// A dual quaternion with `|q_st| = 1` and `Sc(q_st* q_I) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    pub const IDENTITY: UnitDualQuaternion = UnitDualQuaternion(DualQuaternion::ONE);

    pub fn new(q: DualQuaternion) -> Result<Self> {
        Self::new_with_tol(q, UNIT_DQ_TOL)
    }

    pub fn new_with_tol(q: DualQuaternion, tol: f64) -> Result<Self> {
        let m = q.standard.magnitude();
        if !m.is_finite() || (m - 1.0).abs() > tol {
            return Err(CalibError::NonUnitDualQuaternion {
                reason: format!("|q_st| = {m}"),
            });
        }
        let cross = q.unit_cross_term();
        if !cross.is_finite() || cross.abs() > tol {
            return Err(CalibError::NonUnitDualQuaternion {
                reason: format!("Sc(q_st* q_I) = {cross:e}"),
            });
        }
        Ok(Self(q))
    }

    /// Builds a unit dual quaternion from a standard part and an infinitesimal
    /// part by normalizing the former and removing from the latter its
    /// component along the (normalized) standard part.
    pub fn from_parts_projected(standard: Quaternion, infinitesimal: Quaternion) -> Self {
        let s = standard.normalized();
        let i = infinitesimal - s * s.dot(&infinitesimal);
        Self(DualQuaternion::new(s, i))
    }

    #[cfg(test)]
    pub(crate) fn from_dq_unchecked(q: DualQuaternion) -> Self {
        Self(q)
    }

    pub fn dq(&self) -> &DualQuaternion {
        &self.0
    }

    pub fn standard(&self) -> Quaternion {
        self.0.standard
    }

    pub fn infinitesimal(&self) -> Quaternion {
        self.0.infinitesimal
    }

    /// Inverse of a unit dual quaternion is its conjugate.
    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Representative of `{q, -q}` whose standard part has canonical sign.
    pub fn canonical_sign(&self) -> Self {
        if self.0.standard.sign_is_canonical() {
            *self
        } else {
            Self(-self.0)
        }
    }
}

impl Mul for UnitDualQuaternion {
    type Output = UnitDualQuaternion;
    fn mul(self, r: UnitDualQuaternion) -> UnitDualQuaternion {
        UnitDualQuaternion(self.0 * r.0)
    }
}

impl Neg for UnitDualQuaternion {
    type Output = UnitDualQuaternion;
    fn neg(self) -> UnitDualQuaternion {
        UnitDualQuaternion(-self.0)
    }
}

/// Ordered list of dual quaternions.
#[derive(Debug, Clone, PartialEq)]
pub struct DqVector(Vec<DualQuaternion>);

impl DqVector {
    pub fn new(entries: Vec<DualQuaternion>) -> Result<Self> {
        if entries.is_empty() {
            return Err(CalibError::EmptyInput("dual quaternion vector"));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[DualQuaternion] {
        &self.0
    }

    pub fn norm(&self) -> DualNumber {
        dqvec_norm(self)
    }

    /// `‖v_st‖₂²`.
    pub fn standard_norm_squared(&self) -> f64 {
        self.0.iter().map(|q| q.standard.magnitude_squared()).sum()
    }

    /// `‖v_I‖₂²`.
    pub fn infinitesimal_norm_squared(&self) -> f64 {
        self.0.iter().map(|q| q.infinitesimal.magnitude_squared()).sum()
    }
}

/// 2-norm of a dual quaternion vector:
/// `‖v_st‖ + Sc(v_st* v_I)/‖v_st‖ ε`, or `‖v_I‖ ε` when `v_st` is zero.
pub fn dqvec_norm(v: &DqVector) -> DualNumber {
    let st = v.standard_norm_squared().sqrt();
    if st > ZERO_TOL {
        let cross: f64 = v
            .0
            .iter()
            .map(|q| q.standard.dot(&q.infinitesimal))
            .sum();
        DualNumber::new(st, cross / st)
    } else {
        DualNumber::new(0.0, v.infinitesimal_norm_squared().sqrt())
    }
}

/// One `(a, b)` relation: a motion pair for `AX = XB` or a measurement for
/// `AX = ZB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqPair {
    pub a: UnitDualQuaternion,
    pub b: UnitDualQuaternion,
}

impl DqPair {
    pub fn new(a: UnitDualQuaternion, b: UnitDualQuaternion) -> Self {
        Self { a, b }
    }
}

/// Stacked residual `a x - x b`.
pub fn residual_vector_axxb(pairs: &[DqPair], x: &UnitDualQuaternion) -> Vec<DualQuaternion> {
    let x = x.dq();
    pairs
        .iter()
        .map(|p| *p.a.dq() * *x - *x * *p.b.dq())
        .collect()
}

/// Stacked residual `a x - z b`.
pub fn residual_vector_axzb(
    pairs: &[DqPair],
    x: &UnitDualQuaternion,
    z: &UnitDualQuaternion,
) -> Vec<DualQuaternion> {
    pairs
        .iter()
        .map(|p| *p.a.dq() * *x.dq() - *z.dq() * *p.b.dq())
        .collect()
}

/// `‖a x - x b‖₂` as a dual number. An empty pair list has residual zero.
pub fn residual_axxb(pairs: &[DqPair], x: &UnitDualQuaternion) -> DualNumber {
    DqVector::new(residual_vector_axxb(pairs, x))
        .map(|v| v.norm())
        .unwrap_or(DualNumber::ZERO)
}

/// `‖a x - z b‖₂` as a dual number. An empty pair list has residual zero.
pub fn residual_axzb(
    pairs: &[DqPair],
    x: &UnitDualQuaternion,
    z: &UnitDualQuaternion,
) -> DualNumber {
    DqVector::new(residual_vector_axzb(pairs, x, z))
        .map(|v| v.norm())
        .unwrap_or(DualNumber::ZERO)
}
