#![allow(dead_code)]

use dqcalib::harness::{
    make_measurement_poses, random_measurement_poses, random_pose, GroundTruth,
};
use dqcalib::{DqPair, MeasurementSet, MotionSet, Pose, Quaternion, UnitDualQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_quat(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

pub fn random_unit_dq(rng: &mut impl Rng) -> UnitDualQuaternion {
    random_pose(rng, 30.0).to_dq()
}

/// Exact instance: ground truth, measurement poses and both solver inputs.
pub struct Instance {
    pub gt: GroundTruth,
    pub measurements: Vec<(Pose, Pose)>,
    pub meas: MeasurementSet,
    pub motions: MotionSet,
}

pub fn exact_instance(rng: &mut impl Rng, n: usize) -> Instance {
    let gt = GroundTruth::random(rng);
    let a = random_measurement_poses(rng, n);
    let measurements = make_measurement_poses(&gt, &a);
    let meas = MeasurementSet::from_poses(&measurements).unwrap();
    let motions = dqcalib::harness::make_motions(&meas).unwrap();
    Instance {
        gt,
        measurements,
        meas,
        motions,
    }
}

/// Motion pairs with `b = x* a x`, so that `a x = x b` exactly.
pub fn exact_motion_pairs(rng: &mut impl Rng, x: &UnitDualQuaternion, n: usize) -> Vec<DqPair> {
    (0..n)
        .map(|_| {
            let a = random_unit_dq(rng);
            DqPair::new(a, x.inverse() * a * *x)
        })
        .collect()
}
