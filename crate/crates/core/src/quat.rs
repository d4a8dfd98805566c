//! Quaternion arithmetic and the 4-vector / 4x4 matrix representations.
//!
//! A quaternion `w + x i + y j + z k` is identified with the column vector
//! `(w, x, y, z)`. Left and right multiplication by a fixed quaternion are
//! linear maps on that vector and are exposed as [`Quaternion::left_matrix`]
//! and [`Quaternion::right_matrix`]:
//!
//! ```text
//! vec(a * b) = M(a) vec(b) = W(b) vec(a)
//! ```

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{CalibError, Result};

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Default tolerance on `|q| - 1` accepted by [`quat_to_rotation`].
pub const UNIT_QUAT_TOL: f64 = 1e-8;
/// Default tolerance on orthonormality accepted by [`rotation_to_quat`].
pub const ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure quaternion `(0, v)`.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    /// Unit quaternion for a rotation of `angle` radians about `axis`.
    /// The axis is normalized; a zero axis yields the identity.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let norm = axis.norm();
        if norm == 0.0 {
            return Self::ONE;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let n = axis / norm;
        Self::new(c, s * n.x, s * n.y, s * n.z)
    }

    pub fn from_vec4(v: &Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vec4(&self) -> Vec4 {
        Vec4::new(self.w, self.x, self.y, self.z)
    }

    /// Imaginary part as a 3-vector.
    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// `Sc(q) = (q + q*) / 2`.
    pub fn scalar_part(&self) -> f64 {
        self.w
    }

    pub fn magnitude_squared(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude_squared().sqrt()
    }

    /// `self / |self|`; the zero quaternion is returned unchanged.
    pub fn normalized(&self) -> Self {
        let m = self.magnitude();
        if m == 0.0 {
            *self
        } else {
            *self * (1.0 / m)
        }
    }

    /// `vec(a)ᵀ vec(b)`, equal to `Sc(a* b)`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Left multiplication matrix `M(a)`: `vec(a * b) = M(a) vec(b)`.
    pub fn left_matrix(&self) -> Mat4 {
        let Quaternion { w, x, y, z } = *self;
        #[rustfmt::skip]
        let m = Mat4::new(
            w, -x, -y, -z,
            x,  w, -z,  y,
            y,  z,  w, -x,
            z, -y,  x,  w,
        );
        m
    }

    /// Right multiplication matrix `W(a)`: `vec(b * a) = W(a) vec(b)`.
    pub fn right_matrix(&self) -> Mat4 {
        let Quaternion { w, x, y, z } = *self;
        #[rustfmt::skip]
        let m = Mat4::new(
            w, -x, -y, -z,
            x,  w,  z, -y,
            y, -z,  w,  x,
            z,  y, -x,  w,
        );
        m
    }

    /// Representative of `{q, -q}` with `w > 0`, or, when `w == 0`, with the
    /// first nonzero component positive.
    pub fn canonical_sign(&self) -> Self {
        if self.sign_is_canonical() {
            *self
        } else {
            -*self
        }
    }

    pub fn sign_is_canonical(&self) -> bool {
        for c in [self.w, self.x, self.y, self.z] {
            if c > 0.0 {
                return true;
            }
            if c < 0.0 {
                return false;
            }
        }
        true
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.magnitude() - 1.0).abs() <= tol
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// A 3x3 proper orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Accepts `m` if `mᵀm = I` and `det m = 1` within `tol`.
    pub fn new(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        check_rotation(&m, tol)?;
        Ok(Self(m))
    }

    /// Nearest rotation in the Frobenius sense (polar factor with `det = +1`).
    ///
    /// Used for printed matrices whose rounding breaks orthonormality.
    pub fn project(m: &Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(CalibError::NotARotation {
                reason: "non-finite entry".into(),
            });
        }
        let svd = m.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => {
                return Err(CalibError::NotARotation {
                    reason: "SVD failed".into(),
                })
            }
        };
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        Ok(Self(u * d * v_t))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, r: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * r.0)
    }
}

fn check_rotation(m: &Matrix3<f64>, tol: f64) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(CalibError::NotARotation {
            reason: "non-finite entry".into(),
        });
    }
    let orth = (m.transpose() * m - Matrix3::identity()).amax();
    if orth > tol {
        return Err(CalibError::NotARotation {
            reason: format!("|RᵀR - I| = {orth:e} exceeds {tol:e}"),
        });
    }
    let det = m.determinant();
    if (det - 1.0).abs() > tol {
        return Err(CalibError::NotARotation {
            reason: format!("det R = {det}"),
        });
    }
    Ok(())
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_rotation(q: &Quaternion) -> Result<RotationMatrix> {
    quat_to_rotation_with_tol(q, UNIT_QUAT_TOL)
}

pub fn quat_to_rotation_with_tol(q: &Quaternion, tol: f64) -> Result<RotationMatrix> {
    let magnitude = q.magnitude();
    if !magnitude.is_finite() || (magnitude - 1.0).abs() > tol {
        return Err(CalibError::NonUnitQuaternion { magnitude });
    }
    let Quaternion { w, x, y, z } = *q;
    #[rustfmt::skip]
    let r = Matrix3::new(
        w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z),         2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),         w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),         2.0 * (y * z + w * x),         w * w - x * x - y * y + z * z,
    );
    Ok(RotationMatrix(r))
}

/// Unit quaternion of a rotation matrix, sign-canonicalized.
///
/// Extraction branches on the largest of `trace` and the diagonal entries so
/// the divisor never approaches zero (near-π rotations included).
pub fn rotation_to_quat(r: &Matrix3<f64>) -> Result<Quaternion> {
    rotation_to_quat_with_tol(r, ROTATION_TOL)
}

pub fn rotation_to_quat_with_tol(r: &Matrix3<f64>, tol: f64) -> Result<Quaternion> {
    check_rotation(r, tol)?;
    let trace = r.trace();
    let diag = [r[(0, 0)], r[(1, 1)], r[(2, 2)]];
    let q = if trace >= diag[0] && trace >= diag[1] && trace >= diag[2] {
        let s = 2.0 * (1.0 + trace).sqrt();
        Quaternion::new(
            0.25 * s,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        )
    } else if diag[0] >= diag[1] && diag[0] >= diag[2] {
        let s = 2.0 * (1.0 + diag[0] - diag[1] - diag[2]).sqrt();
        Quaternion::new(
            (r[(2, 1)] - r[(1, 2)]) / s,
            0.25 * s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        )
    } else if diag[1] >= diag[2] {
        let s = 2.0 * (1.0 - diag[0] + diag[1] - diag[2]).sqrt();
        Quaternion::new(
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            0.25 * s,
            (r[(1, 2)] + r[(2, 1)]) / s,
        )
    } else {
        let s = 2.0 * (1.0 - diag[0] - diag[1] + diag[2]).sqrt();
        Quaternion::new(
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            0.25 * s,
        )
    };
    Ok(q.normalized().canonical_sign())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_quat(rng: &mut impl Rng) -> Quaternion {
        Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    }

    #[test]
    fn multiplication_table() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(j * i, -k);
        assert_eq!(i * i, -Quaternion::ONE);
        assert_eq!(i * j * k, -Quaternion::ONE);
    }

    #[test]
    fn identity_and_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_quat(&mut rng);
        assert_eq!(Quaternion::ONE * q, q);
        assert_eq!(Quaternion::I.conjugate(), -Quaternion::I);
        assert_eq!(q.conjugate().conjugate(), q);
        let u = q.normalized();
        assert_abs_diff_eq!((u.conjugate() * u).scalar_part(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn matrix_maps_match_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_quat(&mut rng);
            let b = random_quat(&mut rng);
            let ab = (a * b).to_vec4();
            assert!((a.left_matrix() * b.to_vec4() - ab).amax() <= 1e-14);
            assert!((b.right_matrix() * a.to_vec4() - ab).amax() <= 1e-14);
            assert!(((a.conjugate() * b).scalar_part() - a.dot(&b)).abs() <= 1e-14);
        }
    }

    #[test]
    fn left_and_right_matrix_examples() {
        assert_eq!(Quaternion::ONE.left_matrix(), Mat4::identity());
        let w = Quaternion::K.right_matrix();
        assert_eq!(w.column(0).into_owned(), Vec4::new(0.0, 0.0, 0.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_quat(&mut rng).normalized();
        assert!((a.left_matrix().transpose() * a.left_matrix() - Mat4::identity()).amax() <= 1e-13);
    }

    #[test]
    fn rotation_from_quaternion() {
        let r = quat_to_rotation(&Quaternion::ONE).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());

        let q = Quaternion::new((PI / 12.0).cos(), 0.0, 0.0, (PI / 12.0).sin());
        let r = quat_to_rotation(&q).unwrap();
        let expected = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), PI / 6.0);
        assert!((r.matrix() - expected.matrix()).amax() < 1e-15);
        assert_abs_diff_eq!(r.matrix()[(0, 0)], (PI / 6.0).cos(), epsilon = 1e-15);

        let neg = quat_to_rotation(&-q).unwrap();
        assert_eq!(r, neg);
    }

    #[test]
    fn rejects_non_unit_quaternion() {
        let err = quat_to_rotation(&Quaternion::new(1.0, 1.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, CalibError::NonUnitQuaternion { .. }));
    }

    #[test]
    fn quaternion_from_rotation_examples() {
        assert_eq!(rotation_to_quat(&Matrix3::identity()).unwrap(), Quaternion::ONE);
        let rx = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), PI);
        let q = rotation_to_quat(rx.matrix()).unwrap();
        assert!((q - Quaternion::I).magnitude() < 1e-15);
    }

    #[test]
    fn rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(matches!(
            rotation_to_quat(&m),
            Err(CalibError::NotARotation { .. })
        ));
        assert!(rotation_to_quat(&(Matrix3::identity() * 1.01)).is_err());
    }

    #[test]
    fn projection_recovers_rotation() {
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1);
        let noisy = r.matrix().map(|v: f64| (v * 1e4).round() / 1e4);
        let p = RotationMatrix::project(&noisy).unwrap();
        assert!((p.matrix() - r.matrix()).amax() < 1e-4);
        assert!(RotationMatrix::new(*p.matrix(), 1e-12).is_ok());
    }

    #[test]
    fn canonical_sign_rule() {
        assert_eq!(Quaternion::new(-0.5, 0.1, 0.0, 0.0).canonical_sign().w, 0.5);
        assert_eq!(Quaternion::new(0.0, -1.0, 0.0, 0.0).canonical_sign(), Quaternion::I);
        assert_eq!(Quaternion::new(0.0, 0.0, 0.0, -1.0).canonical_sign(), Quaternion::K);
    }

    #[test]
    fn scalar_part_invariant_under_conjugation() {
        // Sc(a* b) = 0 implies Sc(q* a* b q) = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = random_quat(&mut rng);
            let mut b = random_quat(&mut rng);
            // Remove the component of b along a.
            b = b - a * (a.dot(&b) / a.magnitude_squared());
            let q = random_quat(&mut rng);
            let v = q.conjugate() * a.conjugate() * b * q;
            assert!(v.scalar_part().abs() <= 1e-12);
        }
    }
}
