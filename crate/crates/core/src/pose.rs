//! Rigid transforms and their unit dual quaternion encoding.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::dual::{DualQuaternion, UnitDualQuaternion, UNIT_DQ_TOL};
use crate::error::{CalibError, Result};
use crate::quat::{quat_to_rotation, rotation_to_quat, Quaternion, RotationMatrix};

/// Tolerance on the homogeneous row `(0, 0, 0, 1)` accepted when parsing.
pub const HOMOGENEOUS_ROW_TOL: f64 = 1e-9;

/// A rigid transform `[R t; 0 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(RotationMatrix::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(RotationMatrix::identity(), t)
    }

    /// Rotation of `angle` about `axis` through the origin, then translation `t`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, t: Vector3<f64>) -> Self {
        let q = Quaternion::from_axis_angle(axis, angle);
        let r = quat_to_rotation(&q).expect("axis-angle quaternion is unit");
        Self::new(r, t)
    }

    /// Parses a homogeneous matrix. The bottom row must be `(0, 0, 0, 1)`
    /// within [`HOMOGENEOUS_ROW_TOL`]; the rotation block must be orthonormal
    /// within `rotation_tol` and is then projected onto the nearest rotation.
    pub fn from_homogeneous(m: &Matrix4<f64>, rotation_tol: f64) -> Result<Self> {
        let row = m.row(3);
        let expected = [0.0, 0.0, 0.0, 1.0];
        if row
            .iter()
            .zip(expected)
            .any(|(v, e)| !v.is_finite() || (v - e).abs() > HOMOGENEOUS_ROW_TOL)
        {
            return Err(CalibError::NotARotation {
                reason: format!(
                    "bottom row ({}, {}, {}, {}) is not (0, 0, 0, 1)",
                    row[0], row[1], row[2], row[3]
                ),
            });
        }
        let block: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        RotationMatrix::new(block, rotation_tol)?;
        let rotation = RotationMatrix::project(&block)?;
        let translation = m.fixed_view::<3, 1>(0, 3).into_owned();
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(CalibError::NotARotation {
                reason: "non-finite translation".into(),
            });
        }
        Ok(Self::new(rotation, translation))
    }

    /// Builds a pose from row-major 4x4 data.
    pub fn from_rows(rows: &[[f64; 4]; 4], rotation_tol: f64) -> Result<Self> {
        Self::from_homogeneous(&Matrix4::from_fn(|r, c| rows[r][c]), rotation_tol)
    }

    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let m = self.homogeneous();
        std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt.matrix() * self.translation))
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation.matrix() * other.translation + self.translation,
        )
    }

    pub fn to_dq(&self) -> UnitDualQuaternion {
        pose_to_dq(self).expect("Pose holds a validated rotation")
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, r: Pose) -> Pose {
        self.compose(&r)
    }
}

/// `q_st` encodes `R`; `q_I = ½ t q_st` with `t = (0, t)`.
pub fn pose_to_dq(pose: &Pose) -> Result<UnitDualQuaternion> {
    let standard = rotation_to_quat(pose.rotation.matrix())?;
    let infinitesimal = Quaternion::pure(&pose.translation) * standard * 0.5;
    UnitDualQuaternion::new(DualQuaternion::new(standard, infinitesimal))
}

/// Inverse of [`pose_to_dq`]: `R` from `q_st`, `(0, t) = 2 q_I q_st*`.
pub fn dq_to_pose(q: &UnitDualQuaternion) -> Result<Pose> {
    let dq = q.dq();
    UnitDualQuaternion::new_with_tol(*dq, UNIT_DQ_TOL)?;
    let rotation = quat_to_rotation(&dq.standard)?;
    let t = dq.infinitesimal * dq.standard.conjugate() * 2.0;
    let scale = 1.0 + t.vector_part().norm();
    if t.w.abs() > 1e-10 * scale {
        return Err(CalibError::NonUnitDualQuaternion {
            reason: format!("translation quaternion has scalar part {:e}", t.w),
        });
    }
    Ok(Pose::new(
        RotationMatrix::from_matrix_unchecked(*rotation.matrix()),
        t.vector_part(),
    ))
}

/// `‖X - X̂‖_F` on the 4x4 homogeneous matrices.
pub fn estimation_error(x: &Pose, truth: &Matrix4<f64>) -> f64 {
    (x.homogeneous() - truth).norm()
}
