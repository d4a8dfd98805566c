//! Independent cross-check: multi-start Levenberg-Marquardt directly on the
//! homogeneous-matrix residual `Σ‖A⁽ⁱ⁾X − XB⁽ⁱ⁾‖²_F` (or `A⁽ⁱ⁾X − ZB⁽ⁱ⁾`)
//! over rotations and translations. Shares no code with the spectral solvers.

use nalgebra::{DMatrix, DVector, Matrix4, Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::axxb::MotionSet;
use crate::axzb::MeasurementSet;
use crate::dual::DqPair;
use crate::error::Result;
use crate::pose::{dq_to_pose, Pose};
use crate::quat::RotationMatrix;

use super::fixtures::random_pose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iterations: 200,
            seed: 0x0dd5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: Pose,
    pub z: Option<Pose>,
    /// Sum of squared Frobenius norms of the 4x4 residuals.
    pub residual: f64,
}

pub fn homogeneous_residual_axxb(pairs: &[(Pose, Pose)], x: &Pose) -> f64 {
    let xm = x.homogeneous();
    pairs
        .iter()
        .map(|(a, b)| (a.homogeneous() * xm - xm * b.homogeneous()).norm_squared())
        .sum()
}

pub fn homogeneous_residual_axzb(pairs: &[(Pose, Pose)], x: &Pose, z: &Pose) -> f64 {
    let xm = x.homogeneous();
    let zm = z.homogeneous();
    pairs
        .iter()
        .map(|(a, b)| (a.homogeneous() * xm - zm * b.homogeneous()).norm_squared())
        .sum()
}

pub fn pose_pairs(pairs: &[DqPair]) -> Result<Vec<(Pose, Pose)>> {
    pairs
        .iter()
        .map(|p| Ok((dq_to_pose(&p.a)?, dq_to_pose(&p.b)?)))
        .collect()
}

/// Rotation and translation of each unknown, stored as raw matrices so the
/// local updates below need no re-validation.
#[derive(Debug, Clone)]
struct State(Vec<(Rotation3<f64>, Vector3<f64>)>);

impl State {
    fn from_poses(poses: &[Pose]) -> Self {
        State(
            poses
                .iter()
                .map(|p| {
                    (
                        Rotation3::from_matrix_unchecked(*p.rotation.matrix()),
                        p.translation,
                    )
                })
                .collect(),
        )
    }

    fn matrices(&self) -> Vec<Matrix4<f64>> {
        self.0
            .iter()
            .map(|(r, t)| {
                let mut m = Matrix4::identity();
                m.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
                m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
                m
            })
            .collect()
    }

    /// `R ← exp(δ_ω) R`, `t ← t + δ_t` for each unknown.
    fn retract(&self, delta: &DVector<f64>) -> Self {
        State(
            self.0
                .iter()
                .enumerate()
                .map(|(k, (r, t))| {
                    let w = Vector3::new(delta[6 * k], delta[6 * k + 1], delta[6 * k + 2]);
                    let dt = Vector3::new(delta[6 * k + 3], delta[6 * k + 4], delta[6 * k + 5]);
                    (Rotation3::new(w) * r, t + dt)
                })
                .collect(),
        )
    }

    fn poses(&self) -> Result<Vec<Pose>> {
        self.0
            .iter()
            .map(|(r, t)| Ok(Pose::new(RotationMatrix::project(r.matrix())?, *t)))
            .collect()
    }
}

struct Problem {
    pairs: Vec<(Matrix4<f64>, Matrix4<f64>)>,
    /// `A X = Z B` when true, `A X = X B` otherwise.
    two_unknowns: bool,
}

impl Problem {
    fn residual(&self, s: &State) -> DVector<f64> {
        let m = s.matrices();
        let x = m[0];
        let z = if self.two_unknowns { m[1] } else { m[0] };
        let mut out = DVector::zeros(12 * self.pairs.len());
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            let d = a * x - z * b;
            for r in 0..3 {
                for c in 0..4 {
                    out[12 * i + 4 * r + c] = d[(r, c)];
                }
            }
        }
        out
    }

    fn jacobian(&self, s: &State, params: usize) -> DMatrix<f64> {
        const H: f64 = 1e-6;
        let rows = 12 * self.pairs.len();
        let mut j = DMatrix::zeros(rows, params);
        for p in 0..params {
            let mut d = DVector::zeros(params);
            d[p] = H;
            let plus = self.residual(&s.retract(&d));
            let minus = self.residual(&s.retract(&(-d)));
            j.set_column(p, &((plus - minus) / (2.0 * H)));
        }
        j
    }

    fn levenberg_marquardt(&self, start: State, max_iterations: usize) -> (State, f64) {
        let params = 6 * start.0.len();
        let mut state = start;
        let mut r = self.residual(&state);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..max_iterations {
            let j = self.jacobian(&state, params);
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &r;
            let mut improved = false;
            while lambda < 1e12 {
                let mut damped = jtj.clone();
                for k in 0..params {
                    damped[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
                }
                let Some(chol) = damped.cholesky() else {
                    lambda *= 4.0;
                    continue;
                };
                let delta = chol.solve(&(-&g));
                let cand = state.retract(&delta);
                let cand_r = self.residual(&cand);
                let cand_cost = cand_r.norm_squared();
                if cand_cost < cost {
                    let rel = (cost - cand_cost) / cost.max(f64::MIN_POSITIVE);
                    state = cand;
                    r = cand_r;
                    cost = cand_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = rel > 1e-15 && delta.norm() > 1e-15;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (state, cost)
    }
}

fn multi_start(problem: &Problem, unknowns: usize, opts: &OracleOptions) -> Result<OracleSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(State, f64)> = None;
    for k in 0..opts.starts.max(1) {
        let start: Vec<Pose> = if k == 0 {
            vec![Pose::identity(); unknowns]
        } else {
            (0..unknowns)
                .map(|_| {
                    let p = random_pose(&mut rng, 0.0);
                    Pose::new(p.rotation, Vector3::zeros())
                })
                .collect()
        };
        let (state, cost) =
            problem.levenberg_marquardt(State::from_poses(&start), opts.max_iterations);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((state, cost));
        }
    }
    let (state, _) = best.expect("at least one start");
    let poses = state.poses()?;
    let x = poses[0];
    let z = poses.get(1).copied();
    let pairs: Vec<(Pose, Pose)> = problem
        .pairs
        .iter()
        .map(|(a, b)| {
            Ok((
                Pose::from_homogeneous(a, 1e-6)?,
                Pose::from_homogeneous(b, 1e-6)?,
            ))
        })
        .collect::<Result<_>>()?;
    let residual = match z {
        Some(z) => homogeneous_residual_axzb(&pairs, &x, &z),
        None => homogeneous_residual_axxb(&pairs, &x),
    };
    Ok(OracleSolution { x, z, residual })
}

pub fn oracle_solve_axxb_poses(pairs: &[(Pose, Pose)], opts: &OracleOptions) -> Result<OracleSolution> {
    let problem = Problem {
        pairs: pairs
            .iter()
            .map(|(a, b)| (a.homogeneous(), b.homogeneous()))
            .collect(),
        two_unknowns: false,
    };
    multi_start(&problem, 1, opts)
}

pub fn oracle_solve_axzb_poses(pairs: &[(Pose, Pose)], opts: &OracleOptions) -> Result<OracleSolution> {
    let problem = Problem {
        pairs: pairs
            .iter()
            .map(|(a, b)| (a.homogeneous(), b.homogeneous()))
            .collect(),
        two_unknowns: true,
    };
    multi_start(&problem, 2, opts)
}

pub fn oracle_solve_axxb(m: &MotionSet, opts: &OracleOptions) -> Result<OracleSolution> {
    oracle_solve_axxb_poses(&pose_pairs(m.pairs())?, opts)
}

pub fn oracle_solve_axzb(m: &MeasurementSet, opts: &OracleOptions) -> Result<OracleSolution> {
    oracle_solve_axzb_poses(&pose_pairs(m.pairs())?, opts)
}
