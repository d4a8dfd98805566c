//! Small dense spectral routines, equality-constrained QPs and the
//! sphere-coupled QCQP engine used by both calibration solvers.

mod eig;
mod qp;
mod sphere;

pub use eig::{
    svd4, sym_extremal_eig, Extremum, PairedBasis, SpectralBasis, Svd4, CLUSTER_TOL,
};
pub use qp::{solve_eq_qp, EqConstrainedQp, QpSolution};
pub use sphere::{
    solve_sphere_coupled, solve_sphere_coupled_with, sphere_samples, SphereCoupledProblem,
    SphereOptions, SphereSolution,
};
