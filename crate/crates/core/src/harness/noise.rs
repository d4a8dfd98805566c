//! Gaussian perturbation of measured poses.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CalibError, Result};
use crate::pose::Pose;
use crate::quat::{quat_to_rotation, rotation_to_quat, Quaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "noise sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// `q ← normalize(q + δ_q)`, `t ← t + δ_t` with i.i.d. `N(0, σ²)` entries.
/// `σ = 0` returns the input unchanged.
pub fn perturb_pose_with<R: Rng + ?Sized>(pose: &Pose, sigma: f64, rng: &mut R) -> Result<Pose> {
    if sigma == 0.0 {
        return Ok(*pose);
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| CalibError::InvalidParameter(format!("noise sigma {sigma}: {e}")))?;
    let q = rotation_to_quat(pose.rotation.matrix())?;
    let dq: [f64; 4] = std::array::from_fn(|_| normal.sample(rng));
    let noisy = q + Quaternion::new(dq[0], dq[1], dq[2], dq[3]);
    let rotation = quat_to_rotation(&noisy.normalized())?;
    let dt = Vector3::from_fn(|_, _| normal.sample(rng));
    Ok(Pose::new(rotation, pose.translation + dt))
}

pub fn perturb_pose(pose: &Pose, noise: &NoiseModel) -> Result<Pose> {
    perturb_pose_with(pose, noise.sigma, &mut noise.rng())
}

/// Perturbs every `B⁽ⁱ⁾` of a measurement list from one stream.
pub fn perturb_measurements(meas: &[(Pose, Pose)], noise: &NoiseModel) -> Result<Vec<(Pose, Pose)>> {
    let mut rng = noise.rng();
    meas.iter()
        .map(|(a, b)| Ok((*a, perturb_pose_with(b, noise.sigma, &mut rng)?)))
        .collect()
}
