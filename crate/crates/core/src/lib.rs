//! Hand-eye calibration with dual quaternions.
//!
//! Solves `A X = X B` and `A X = Z B` for rigid transforms by minimizing the
//! dual-number 2-norm of the dual quaternion residual. Both solvers share a
//! two-stage structure: a spectral rotation stage and a second stage that
//! either solves a regularized QCQP (rotationwise noiseless data) or an
//! eigenproblem followed by a constrained least-squares patch.

pub mod axxb;
pub mod axzb;
pub mod dual;
pub mod error;
pub mod harness;
pub mod pose;
pub mod quat;
pub mod solver;
pub mod spectral;

pub use axxb::{AxxbSolution, MotionSet};
pub use axzb::{AxzbSolution, MeasurementSet};
pub use dual::{DqPair, DqVector, DualNumber, DualQuaternion, UnitDualQuaternion};
pub use error::{CalibError, Result};
pub use pose::{dq_to_pose, estimation_error, pose_to_dq, Pose};
pub use quat::{quat_to_rotation, rotation_to_quat, Quaternion, RotationMatrix};
pub use solver::{Branch, SolverOptions, DEFAULT_GAMMA, DEFAULT_NOISELESS_TOL};

/// Solves `A X = X B` with default options.
pub fn solve_axxb(motions: &MotionSet) -> Result<AxxbSolution> {
    axxb::solve(motions, &SolverOptions::default())
}

/// Solves `A X = Z B` with default options.
pub fn solve_axzb(measurements: &MeasurementSet) -> Result<AxzbSolution> {
    axzb::solve(measurements, &SolverOptions::default())
}
