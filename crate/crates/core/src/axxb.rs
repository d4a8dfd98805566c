//! Dual quaternion solver for `A X = X B`.
//!
//! The unit dual quaternion `x = x_st + x_I ε` minimizing `‖a x - x b‖₂` is
//! found in two stages. The rotation stage minimizes `x_stᵀ L11 x_st` on the
//! unit sphere; its optimum `λ₀` decides the second stage:
//!
//! * `λ₀ = 0` (rotationwise noiseless): the regularized QCQP over the
//!   eigenspace of `λ₀` picks the minimum-translation solution.
//! * `λ₀ > 0`: `x_st` comes from the minimal eigenvector of
//!   `Sym(Qᵀ L12 Q)` and `x_I` from the patch
//!   `min x_Iᵀ L11 x_I + 2 x_Iᵀ L12 x_st  s.t. x_stᵀ x_I = 0`.

use nalgebra::{DMatrix, DVector, Matrix4xX};

use crate::dual::{residual_axxb, DqPair, DualNumber, UnitDualQuaternion, UNIT_DQ_TOL};
use crate::error::{CalibError, Result};
use crate::pose::{dq_to_pose, Pose};
use crate::quat::{Mat4, Quaternion, Vec4};
use crate::solver::{Branch, SolverOptions};
use crate::spectral::{
    solve_eq_qp, solve_sphere_coupled_with, sym_extremal_eig, EqConstrainedQp, Extremum,
    SpectralBasis, SphereCoupledProblem, SphereOptions,
};

/// Motion pairs `(a⁽ⁱ⁾, b⁽ⁱ⁾)`, `n ≥ 1`.
///
/// `a = x b x*` forces `Sc(a_st) = Sc(b_st)`, so `b⁽ⁱ⁾` is replaced by the
/// equivalent `-b⁽ⁱ⁾` whenever the scalar parts have opposite signs.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSet {
    pairs: Vec<DqPair>,
}

impl MotionSet {
    pub fn new(pairs: Vec<DqPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(CalibError::EmptyInput("motion set"));
        }
        for p in &pairs {
            UnitDualQuaternion::new_with_tol(*p.a.dq(), UNIT_DQ_TOL)?;
            UnitDualQuaternion::new_with_tol(*p.b.dq(), UNIT_DQ_TOL)?;
        }
        let pairs = pairs
            .into_iter()
            .map(|p| {
                if p.a.standard().w * p.b.standard().w < 0.0 {
                    DqPair::new(p.a, -p.b)
                } else {
                    p
                }
            })
            .collect();
        Ok(Self { pairs })
    }

    pub fn from_poses(poses: &[(Pose, Pose)]) -> Result<Self> {
        Self::new(
            poses
                .iter()
                .map(|(a, b)| DqPair::new(a.to_dq(), b.to_dq()))
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[DqPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxxbMatrices {
    pub l11: Mat4,
    pub l22: Mat4,
    pub l12: Mat4,
}

/// `L11 = Σ DᵢᵀDᵢ`, `L22 = Σ EᵢᵀEᵢ`, `L12 = Σ DᵢᵀEᵢ` with
/// `Dᵢ = M(a_st) - W(b_st)` and `Eᵢ = M(a_I) - W(b_I)`.
pub fn build_matrices(m: &MotionSet) -> AxxbMatrices {
    let mut l11 = Mat4::zeros();
    let mut l22 = Mat4::zeros();
    let mut l12 = Mat4::zeros();
    for p in m.pairs() {
        let d = p.a.standard().left_matrix() - p.b.standard().right_matrix();
        let e = p.a.infinitesimal().left_matrix() - p.b.infinitesimal().right_matrix();
        l11 += d.transpose() * d;
        l22 += e.transpose() * e;
        l12 += d.transpose() * e;
    }
    AxxbMatrices { l11, l22, l12 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationStage {
    pub basis: SpectralBasis,
    pub noiseless: bool,
}

impl RotationStage {
    pub fn lambda0(&self) -> f64 {
        self.basis.value
    }
}

/// Minimal eigenpair of `L11`; noiseless iff `λ₀ ≤ noiseless_tol * n`.
pub fn rotation_stage(
    l: &AxxbMatrices,
    n: usize,
    noiseless_tol: f64,
    cluster_tol: f64,
) -> Result<RotationStage> {
    let basis = sym_extremal_eig(&l.l11, Extremum::Min, cluster_tol)?;
    let noiseless = basis.value <= noiseless_tol * n as f64;
    Ok(RotationStage { basis, noiseless })
}

fn basis_dmatrix(q: &Matrix4xX<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, q.ncols(), |r, c| q[(r, c)])
}

fn mat4_dmatrix(m: &Mat4) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

fn quat_from_slice(v: &[f64]) -> Quaternion {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

/// The regularized QCQP
///
/// ```text
/// min  x_Iᵀ(L11 + γI)x_I + 2 x_Iᵀ L12 Q y + yᵀ Qᵀ(L22 + γI) Q y
/// s.t. yᵀy = 1,  (Q y)ᵀ x_I = 0
/// ```
pub fn noiseless_problem(l: &AxxbMatrices, q: &Matrix4xX<f64>, gamma: f64) -> SphereCoupledProblem {
    let qd = basis_dmatrix(q);
    let id = DMatrix::<f64>::identity(4, 4);
    let hessian = mat4_dmatrix(&l.l11) + &id * gamma;
    let coupling = mat4_dmatrix(&l.l12) * &qd;
    let outer = qd.transpose() * (mat4_dmatrix(&l.l22) + &id * gamma) * &qd;
    SphereCoupledProblem {
        hessian: symmetrize(hessian),
        coupling,
        outer: symmetrize(outer),
        constraint_maps: vec![qd],
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Second stage for rotationwise noiseless data. Returns `(x_st, x_I)`.
pub fn solve_noiseless(
    l: &AxxbMatrices,
    basis: &SpectralBasis,
    gamma: f64,
    sphere: &SphereOptions,
) -> Result<(Quaternion, Quaternion)> {
    let problem = noiseless_problem(l, &basis.basis, gamma);
    let sol = solve_sphere_coupled_with(&problem, sphere)?;
    let x_st = basis_dmatrix(&basis.basis) * &sol.y;
    Ok((quat_from_slice(x_st.as_slice()), quat_from_slice(sol.inner.as_slice())))
}

/// Second stage for noisy data. Returns `(x_st, x_I)`.
pub fn solve_noisy(l: &AxxbMatrices, basis: &SpectralBasis) -> Result<(Quaternion, Quaternion)> {
    let qd = basis_dmatrix(&basis.basis);
    let y = if qd.ncols() == 1 {
        DVector::from_element(1, 1.0)
    } else {
        let reduced = qd.transpose() * mat4_dmatrix(&l.l12) * &qd;
        min_eigenvector(&symmetrize(reduced))
    };
    let x_st = Quaternion::from_vec4(&Vec4::from_iterator((&qd * y).iter().copied())).normalized();
    let x_inf = patch(l, &x_st)?;
    Ok((x_st, x_inf))
}

/// `min x_Iᵀ L11 x_I + 2 x_Iᵀ L12 x_st  s.t. x_stᵀ x_I = 0`.
pub fn patch(l: &AxxbMatrices, x_st: &Quaternion) -> Result<Quaternion> {
    let xs = x_st.to_vec4();
    let qp = EqConstrainedQp::new(
        symmetrize(mat4_dmatrix(&l.l11)),
        DVector::from_iterator(4, (l.l12 * xs).iter().copied()),
        DMatrix::from_row_slice(1, 4, xs.as_slice()),
    );
    let sol = solve_eq_qp(&qp)?;
    Ok(quat_from_slice(sol.x.as_slice()))
}

pub(crate) fn min_eigenvector(s: &DMatrix<f64>) -> DVector<f64> {
    extremal_eigenvector(s, false)
}

pub(crate) fn extremal_eigenvector(s: &DMatrix<f64>, largest: bool) -> DVector<f64> {
    let eig = s.clone().symmetric_eigen();
    let mut idx = 0;
    for i in 1..eig.eigenvalues.len() {
        let better = if largest {
            eig.eigenvalues[i] > eig.eigenvalues[idx]
        } else {
            eig.eigenvalues[i] < eig.eigenvalues[idx]
        };
        if better {
            idx = i;
        }
    }
    eig.eigenvectors.column(idx).into_owned()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxxbSolution {
    pub x: UnitDualQuaternion,
    pub pose: Pose,
    pub branch: Branch,
    pub lambda0: f64,
    pub multiplicity: usize,
    pub residual: DualNumber,
    pub gamma: f64,
}

/// The full `A X = X B` pipeline.
pub fn solve(m: &MotionSet, opts: &SolverOptions) -> Result<AxxbSolution> {
    opts.validate()?;
    let l = build_matrices(m);
    let stage = rotation_stage(&l, m.len(), opts.noiseless_tol, opts.cluster_tol)?;
    let (branch, (x_st, x_inf)) = if stage.noiseless {
        (
            Branch::Noiseless,
            solve_noiseless(&l, &stage.basis, opts.gamma, &opts.sphere)?,
        )
    } else {
        (Branch::Noisy, solve_noisy(&l, &stage.basis)?)
    };
    let x = UnitDualQuaternion::from_parts_projected(x_st, x_inf).canonical_sign();
    let pose = dq_to_pose(&x)?;
    Ok(AxxbSolution {
        residual: residual_axxb(m.pairs(), &x),
        x,
        pose,
        branch,
        lambda0: stage.lambda0(),
        multiplicity: stage.basis.multiplicity(),
        gamma: opts.gamma,
    })
}
