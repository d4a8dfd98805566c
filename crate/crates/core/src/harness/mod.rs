//! Synthetic experiments: fixtures, noise, error metrics, degenerate-case
//! canonicalization, robustness sweeps and an independent oracle.

mod canonical;
mod fixtures;
mod noise;
mod oracle;
mod sweep;

pub use canonical::{
    canonicalize_axxb, canonicalize_axzb, canonicalize_parallel, canonicalize_parallel_pair,
    parallel_slide,
};
pub use fixtures::{
    make_measurement_poses, make_measurements, make_motion_poses, make_motions,
    matrix_from_rows, parallel_poses, random_measurement_poses, random_pose, GroundTruth,
    PaperFixtures, PARALLEL_ANGLES, PARALLEL_AXIS, PARALLEL_TRANSLATIONS, PRINTED_A,
    PRINTED_ROTATION_TOL, PRINTED_X, PRINTED_Z,
};
pub use noise::{perturb_measurements, perturb_pose, perturb_pose_with, NoiseModel};
pub use oracle::{
    homogeneous_residual_axxb, homogeneous_residual_axzb, oracle_solve_axxb,
    oracle_solve_axxb_poses, oracle_solve_axzb, oracle_solve_axzb_poses, pose_pairs,
    OracleOptions, OracleSolution,
};
pub use sweep::{
    robustness_sweep, run_once, Equation, ErrorReport, SweepConfig, SweepRow, CSV_HEADER,
};

pub use crate::pose::estimation_error;
