//! Ground truth, measurement construction and the reference fixtures.

use nalgebra::{Matrix4, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::axxb::MotionSet;
use crate::axzb::MeasurementSet;
use crate::dual::DqPair;
use crate::error::{CalibError, Result};
use crate::pose::Pose;
use crate::quat::{quat_to_rotation, Quaternion};

/// Orthonormality slack admitted for matrices printed to four decimals.
pub const PRINTED_ROTATION_TOL: f64 = 1e-3;

pub const PRINTED_X: [[f64; 4]; 4] = [
    [0.9995, -0.0100, 0.0297, 9.190],
    [0.0116, 0.9986, -0.0523, 5.397],
    [-0.0291, 0.0526, 0.9982, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub const PRINTED_Z: [[f64; 4]; 4] = [
    [0.2790, -0.0981, -0.9553, 164.226],
    [-0.5439, 0.8037, -0.2414, 301.638],
    [0.7914, 0.5869, 0.1709, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub const PRINTED_A: [[[f64; 4]; 4]; 4] = [
    [
        [0.1752, -0.6574, 0.7329, -10.5536],
        [0.6325, -0.4954, -0.5954, -30.5304],
        [0.7545, 0.5679, 0.3290, 50.4851],
        [0.0, 0.0, 0.0, 1.0],
    ],
    [
        [-0.0745, 0.9661, 0.2471, -20.4123],
        [0.8573, -0.0645, 0.5108, -50.8904],
        [0.5094, 0.2499, -0.8234, 80.8685],
        [0.0, 0.0, 0.0, 1.0],
    ],
    [
        [-0.1456, -0.6867, 0.7122, -20.5519],
        [0.8252, -0.4814, -0.2955, -30.6491],
        [0.5458, 0.5447, 0.6367, 60.4312],
        [0.0, 0.0, 0.0, 1.0],
    ],
    [
        [-0.1434, -0.5250, 0.8389, -10.5892],
        [0.8158, -0.5427, -0.2001, -50.6730],
        [0.5603, 0.6557, 0.5061, 80.4641],
        [0.0, 0.0, 0.0, 1.0],
    ],
];

pub const PARALLEL_AXIS: [f64; 3] = [0.0, 0.0, 1.0];

pub const PARALLEL_ANGLES: [f64; 4] = [
    std::f64::consts::FRAC_PI_6,
    std::f64::consts::FRAC_PI_3,
    -std::f64::consts::FRAC_PI_6,
    -std::f64::consts::FRAC_PI_3,
];

pub const PARALLEL_TRANSLATIONS: [[f64; 3]; 4] = [
    [-10.9865, 12.3788, -27.2571],
    [38.8986, 84.6736, -93.8814],
    [-75.7189, -53.6187, 28.5794],
    [-52.8133, 93.3732, -70.1666],
];

pub fn matrix_from_rows(rows: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| rows[r][c])
}

/// The unknown transforms `X̂` and `Ẑ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub x: Pose,
    pub z: Pose,
}

impl GroundTruth {
    /// The printed `X̂`, `Ẑ`, projected onto SE(3).
    pub fn paper() -> Self {
        Self {
            x: Pose::from_rows(&PRINTED_X, PRINTED_ROTATION_TOL).expect("printed X is a pose"),
            z: Pose::from_rows(&PRINTED_Z, PRINTED_ROTATION_TOL).expect("printed Z is a pose"),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            x: random_pose(rng, 10.0),
            z: random_pose(rng, 200.0),
        }
    }
}

/// Measurement poses `A⁽ⁱ⁾` of the two reference scenarios plus their
/// ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperFixtures {
    pub ground_truth: GroundTruth,
    /// The four printed `A⁽ⁱ⁾`, projected onto SE(3).
    pub nonparallel: Vec<Pose>,
    /// Rotations about a common axis with the printed translations.
    pub parallel: Vec<Pose>,
}

impl PaperFixtures {
    pub fn load() -> Self {
        let nonparallel = PRINTED_A
            .iter()
            .map(|rows| Pose::from_rows(rows, PRINTED_ROTATION_TOL).expect("printed A is a pose"))
            .collect();
        Self {
            ground_truth: GroundTruth::paper(),
            nonparallel,
            parallel: parallel_poses(),
        }
    }

    pub fn parallel_axis() -> Vector3<f64> {
        Vector3::from(PARALLEL_AXIS)
    }
}

pub fn parallel_poses() -> Vec<Pose> {
    let axis = Vector3::from(PARALLEL_AXIS);
    PARALLEL_ANGLES
        .iter()
        .zip(PARALLEL_TRANSLATIONS)
        .map(|(&angle, t)| Pose::from_axis_angle(&axis, angle, Vector3::from(t)))
        .collect()
}

/// Uniform random rotation with Gaussian translation of scale `t_scale`.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, t_scale: f64) -> Pose {
    let q = loop {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let q = Quaternion::new(v[0], v[1], v[2], v[3]);
        if q.magnitude() > 1e-3 {
            break q.normalized();
        }
    };
    let t = Vector3::from_fn(|_, _| {
        let v: f64 = StandardNormal.sample(rng);
        t_scale * v
    });
    Pose::new(quat_to_rotation(&q).expect("normalized"), t)
}

/// `n` random measurement poses with generic (pairwise non-parallel) axes.
pub fn random_measurement_poses<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Pose> {
    (0..n).map(|_| random_pose(rng, 50.0)).collect()
}

/// `(A⁽ⁱ⁾, B⁽ⁱ⁾)` with `B⁽ⁱ⁾ = Ẑ⁻¹ A⁽ⁱ⁾ X̂`.
pub fn make_measurement_poses(gt: &GroundTruth, a: &[Pose]) -> Vec<(Pose, Pose)> {
    let z_inv = gt.z.inverse();
    a.iter().map(|ai| (*ai, z_inv * *ai * gt.x)).collect()
}

pub fn make_measurements(gt: &GroundTruth, a: &[Pose]) -> Result<MeasurementSet> {
    MeasurementSet::from_poses(&make_measurement_poses(gt, a))
}

fn check_motion_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(CalibError::TooFewMeasurements {
            required: 2,
            got: n,
        });
    }
    Ok(())
}

/// Relative motions `((A⁽ⁱ⁾)⁻¹A⁽ʲ⁾, (B⁽ⁱ⁾)⁻¹B⁽ʲ⁾)` for `i < j`.
pub fn make_motion_poses(meas: &[(Pose, Pose)]) -> Result<Vec<(Pose, Pose)>> {
    check_motion_count(meas.len())?;
    let mut out = Vec::with_capacity(meas.len() * (meas.len() - 1) / 2);
    for i in 0..meas.len() {
        for j in i + 1..meas.len() {
            let (ai, bi) = meas[i];
            let (aj, bj) = meas[j];
            out.push((ai.inverse() * aj, bi.inverse() * bj));
        }
    }
    Ok(out)
}

/// Dual quaternion form of [`make_motion_poses`].
pub fn make_motions(meas: &MeasurementSet) -> Result<MotionSet> {
    let p = meas.pairs();
    check_motion_count(p.len())?;
    let mut out = Vec::with_capacity(p.len() * (p.len() - 1) / 2);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            out.push(DqPair::new(
                p[i].a.inverse() * p[j].a,
                p[i].b.inverse() * p[j].b,
            ));
        }
    }
    MotionSet::new(out)
}
