//! Representative selection on the degenerate family of parallel-axis data.
//!
//! When every `A⁽ⁱ⁾` rotates about axes parallel to a unit `n`, a pure
//! translation `T(s n)` commutes with each of them, so `X ↦ T(s n) X`
//! (and `Z ↦ T(s n) Z` for `A X = Z B`) leaves the residual unchanged.

use nalgebra::Vector3;

use crate::axxb::AxxbSolution;
use crate::axzb::AxzbSolution;
use crate::error::{CalibError, Result};
use crate::pose::Pose;

fn unit_axis(axis: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = axis.norm();
    if !(n > 1e-12 && n.is_finite()) {
        return Err(CalibError::InvalidParameter(
            "canonicalization axis must be nonzero".into(),
        ));
    }
    Ok(axis / n)
}

/// The slide `T(-(n·t_X) n)` that zeroes the axial translation of `x`.
pub fn parallel_slide(x: &Pose, axis: &Vector3<f64>) -> Result<Pose> {
    let n = unit_axis(axis)?;
    Ok(Pose::from_translation(-n * n.dot(&x.translation)))
}

pub fn canonicalize_parallel(x: &Pose, axis: &Vector3<f64>) -> Result<Pose> {
    Ok(parallel_slide(x, axis)? * *x)
}

/// Applies the slide that canonicalizes `x` to both `x` and `z`.
pub fn canonicalize_parallel_pair(
    x: &Pose,
    z: &Pose,
    axis: &Vector3<f64>,
) -> Result<(Pose, Pose)> {
    let s = parallel_slide(x, axis)?;
    Ok((s * *x, s * *z))
}

pub fn canonicalize_axxb(sol: &AxxbSolution, axis: &Vector3<f64>) -> Result<AxxbSolution> {
    let pose = canonicalize_parallel(&sol.pose, axis)?;
    Ok(AxxbSolution {
        x: pose.to_dq().canonical_sign(),
        pose,
        ..sol.clone()
    })
}

pub fn canonicalize_axzb(sol: &AxzbSolution, axis: &Vector3<f64>) -> Result<AxzbSolution> {
    let (x_pose, z_pose) = canonicalize_parallel_pair(&sol.x_pose, &sol.z_pose, axis)?;
    let mut x = x_pose.to_dq();
    let mut z = z_pose.to_dq();
    if !x.standard().sign_is_canonical() {
        x = -x;
        z = -z;
    }
    Ok(AxzbSolution {
        x,
        z,
        x_pose,
        z_pose,
        ..sol.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroes_third_component() {
        let x = Pose::from_translation(Vector3::new(9.19, 5.397, 3.0));
        let c = canonicalize_parallel(&x, &Vector3::z()).unwrap();
        assert_eq!(c.translation, Vector3::new(9.19, 5.397, 0.0));
    }

    #[test]
    fn zero_axis_is_rejected() {
        assert!(canonicalize_parallel(&Pose::identity(), &Vector3::zeros()).is_err());
    }
}
