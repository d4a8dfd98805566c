//! Dual quaternion solver for `A X = Z B`.
//!
//! `‖a_st x_st - z_st b_st‖² = 2n - 2 x_stᵀ K11 z_st`, so the rotation stage
//! is the top singular pair of `K11` and the data are rotationwise noiseless
//! iff `σ₁ = n`. The second stage mirrors the `A X = X B` solver with paired
//! bases `(Q₁, Q₂)` sharing one sphere variable `y`.

use nalgebra::{DMatrix, DVector, Matrix4xX};

use crate::axxb::extremal_eigenvector;
use crate::dual::{residual_axzb, DqPair, DualNumber, UnitDualQuaternion, UNIT_DQ_TOL};
use crate::error::{CalibError, Result};
use crate::pose::{dq_to_pose, Pose};
use crate::quat::{Mat4, Quaternion};
use crate::solver::{Branch, SolverOptions};
use crate::spectral::{
    solve_eq_qp, solve_sphere_coupled_with, svd4, EqConstrainedQp, PairedBasis,
    SphereCoupledProblem, SphereOptions,
};

/// Measurements `(a⁽ⁱ⁾, b⁽ⁱ⁾)`. A single measurement is accepted but flagged
/// as underdetermined.
///
/// Each `b⁽ⁱ⁾` is only defined up to sign, while `a⁽ⁱ⁾x = z b⁽ⁱ⁾` needs one
/// consistent choice. Exact data satisfy `Sc((a⁽ʲ⁾)*a⁽ⁱ⁾) = Sc((b⁽ʲ⁾)*b⁽ⁱ⁾)`
/// for the standard parts, so signs are propagated from the first
/// measurement, each time through the already aligned measurement with the
/// most decisive scalar part.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pairs: Vec<DqPair>,
}

fn align_signs(mut pairs: Vec<DqPair>) -> Vec<DqPair> {
    let n = pairs.len();
    let rel = |p: &DqPair, q: &DqPair| {
        (
            p.a.standard().dot(&q.a.standard()),
            p.b.standard().dot(&q.b.standard()),
        )
    };
    let mut aligned = vec![false; n];
    aligned[0] = true;
    for _ in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| !aligned[i]) {
            for j in (0..n).filter(|&j| aligned[j]) {
                let (sa, sb) = rel(&pairs[j], &pairs[i]);
                let weight = sa.abs().min(sb.abs());
                if best.is_none_or(|(_, _, w)| weight > w) {
                    best = Some((i, j, weight));
                }
            }
        }
        let (i, j, _) = best.expect("an unaligned measurement remains");
        let (sa, sb) = rel(&pairs[j], &pairs[i]);
        if sa * sb < 0.0 {
            pairs[i] = DqPair::new(pairs[i].a, -pairs[i].b);
        }
        aligned[i] = true;
    }
    pairs
}

impl MeasurementSet {
    pub fn new(pairs: Vec<DqPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(CalibError::EmptyInput("measurement set"));
        }
        for p in &pairs {
            UnitDualQuaternion::new_with_tol(*p.a.dq(), UNIT_DQ_TOL)?;
            UnitDualQuaternion::new_with_tol(*p.b.dq(), UNIT_DQ_TOL)?;
        }
        Ok(Self {
            pairs: align_signs(pairs),
        })
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

    /// Two unknown transforms need at least two relations.
    pub fn is_underdetermined(&self) -> bool {
        self.pairs.len() < 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxzbMatrices {
    pub k11: Mat4,
    pub k12: Mat4,
    pub k21: Mat4,
}

/// `K11 = Σ M(a_st)ᵀW(b_st)`, `K12 = Σ M(a_st)ᵀW(b_I)`, `K21 = Σ M(a_I)ᵀW(b_st)`.
pub fn build_matrices(m: &MeasurementSet) -> AxzbMatrices {
    let mut k11 = Mat4::zeros();
    let mut k12 = Mat4::zeros();
    let mut k21 = Mat4::zeros();
    for p in m.pairs() {
        let ma_st = p.a.standard().left_matrix();
        let wb_st = p.b.standard().right_matrix();
        k11 += ma_st.transpose() * wb_st;
        k12 += ma_st.transpose() * p.b.infinitesimal().right_matrix();
        k21 += p.a.infinitesimal().left_matrix().transpose() * wb_st;
    }
    AxzbMatrices { k11, k12, k21 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationStage {
    pub basis: PairedBasis,
    pub noiseless: bool,
}

impl RotationStage {
    pub fn sigma1(&self) -> f64 {
        self.basis.value
    }
}

/// Top singular pair of `K11`; noiseless iff `n - σ₁ ≤ noiseless_tol * n`.
pub fn rotation_stage(
    k: &AxzbMatrices,
    n: usize,
    noiseless_tol: f64,
    cluster_tol: f64,
) -> RotationStage {
    let basis = svd4(&k.k11).top_basis(cluster_tol);
    let n = n as f64;
    let noiseless = n - basis.value <= noiseless_tol * n;
    RotationStage { basis, noiseless }
}

fn to_dmatrix(q: &Matrix4xX<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, q.ncols(), |r, c| q[(r, c)])
}

fn mat4_dmatrix(m: &Mat4) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

fn quat_from_slice(v: &[f64]) -> Quaternion {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

/// Quadratic model of `Σ‖M(a_st)x_I - W(b_st)z_I + rᵢ‖²` in `w = (x_I, z_I)`:
/// returns the 8x8 Hessian block `Σ [Eᵢ -Fᵢ]ᵀ[Eᵢ -Fᵢ]`.
fn translation_hessian(m: &MeasurementSet) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(8, 8);
    for p in m.pairs() {
        let g = stacked_map(p);
        h += g.transpose() * &g;
    }
    h
}

/// `[M(a_st)  -W(b_st)]`, the 4x8 map `w ↦ a_st x_I - z_I b_st`.
fn stacked_map(p: &DqPair) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(4, 8);
    g.view_mut((0, 0), (4, 4))
        .copy_from(&mat4_dmatrix(&p.a.standard().left_matrix()));
    g.view_mut((0, 4), (4, 4))
        .copy_from(&(-mat4_dmatrix(&p.b.standard().right_matrix())));
    g
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// The regularized QCQP
///
/// ```text
/// min  Σ‖M(a_st)x_I + M(a_I)Q₁y - W(b_I)Q₂y - W(b_st)z_I‖² + γ(‖x_I‖² + ‖z_I‖² + 2yᵀy)
/// s.t. yᵀy = 1,  (Q₁y)ᵀx_I = 0,  (Q₂y)ᵀz_I = 0
/// ```
pub fn noiseless_problem(
    m: &MeasurementSet,
    basis: &PairedBasis,
    gamma: f64,
) -> SphereCoupledProblem {
    let q1 = to_dmatrix(&basis.left);
    let q2 = to_dmatrix(&basis.right);
    let k = q1.ncols();
    let mut coupling = DMatrix::zeros(8, k);
    let mut outer = DMatrix::zeros(k, k);
    for p in m.pairs() {
        let g = stacked_map(p);
        let py = mat4_dmatrix(&p.a.infinitesimal().left_matrix()) * &q1
            - mat4_dmatrix(&p.b.infinitesimal().right_matrix()) * &q2;
        coupling += g.transpose() * &py;
        outer += py.transpose() * &py;
    }
    outer += DMatrix::<f64>::identity(k, k) * (2.0 * gamma);
    let hessian = translation_hessian(m) + DMatrix::<f64>::identity(8, 8) * gamma;

    let mut gx = DMatrix::zeros(8, k);
    gx.view_mut((0, 0), (4, k)).copy_from(&q1);
    let mut gz = DMatrix::zeros(8, k);
    gz.view_mut((4, 0), (4, k)).copy_from(&q2);
    SphereCoupledProblem {
        hessian: symmetrize(hessian),
        coupling,
        outer: symmetrize(outer),
        constraint_maps: vec![gx, gz],
    }
}

/// Translation parts for the noiseless branch.
pub type AxzbParts = (Quaternion, Quaternion, Quaternion, Quaternion);

/// Second stage for rotationwise noiseless data.
/// Returns `(x_st, x_I, z_st, z_I)`.
pub fn solve_noiseless(
    m: &MeasurementSet,
    basis: &PairedBasis,
    gamma: f64,
    sphere: &SphereOptions,
) -> Result<AxzbParts> {
    let problem = noiseless_problem(m, basis, gamma);
    let sol = solve_sphere_coupled_with(&problem, sphere)?;
    let x_st = to_dmatrix(&basis.left) * &sol.y;
    let z_st = to_dmatrix(&basis.right) * &sol.y;
    Ok((
        quat_from_slice(x_st.as_slice()),
        quat_from_slice(&sol.inner.as_slice()[0..4]),
        quat_from_slice(z_st.as_slice()),
        quat_from_slice(&sol.inner.as_slice()[4..8]),
    ))
}

/// Second stage for noisy data. Returns `(x_st, x_I, z_st, z_I)`.
pub fn solve_noisy(
    m: &MeasurementSet,
    k: &AxzbMatrices,
    basis: &PairedBasis,
) -> Result<AxzbParts> {
    let q1 = to_dmatrix(&basis.left);
    let q2 = to_dmatrix(&basis.right);
    let y = if q1.ncols() == 1 {
        DVector::from_element(1, 1.0)
    } else {
        let reduced = q1.transpose() * mat4_dmatrix(&(k.k12 + k.k21)) * &q2;
        extremal_eigenvector(&symmetrize(reduced), true)
    };
    let x_st = quat_from_slice((&q1 * &y).as_slice()).normalized();
    let z_st = quat_from_slice((&q2 * &y).as_slice()).normalized();
    let (x_inf, z_inf) = patch(m, &x_st, &z_st)?;
    Ok((x_st, x_inf, z_st, z_inf))
}

/// `min Σ‖M(a_st)x_I + M(a_I)x_st - W(b_I)z_st - W(b_st)z_I‖²`
/// subject to `x_stᵀx_I = 0` and `z_stᵀz_I = 0`.
pub fn patch(
    m: &MeasurementSet,
    x_st: &Quaternion,
    z_st: &Quaternion,
) -> Result<(Quaternion, Quaternion)> {
    let xs = x_st.to_vec4();
    let zs = z_st.to_vec4();
    let mut linear = DVector::zeros(8);
    for p in m.pairs() {
        let r = p.a.infinitesimal().left_matrix() * xs - p.b.infinitesimal().right_matrix() * zs;
        let r = DVector::from_column_slice(r.as_slice());
        linear += stacked_map(p).transpose() * r;
    }
    let mut constraints = DMatrix::zeros(2, 8);
    constraints
        .view_mut((0, 0), (1, 4))
        .copy_from_slice(xs.as_slice());
    constraints
        .view_mut((1, 4), (1, 4))
        .copy_from_slice(zs.as_slice());
    let qp = EqConstrainedQp::new(symmetrize(translation_hessian(m)), linear, constraints);
    let sol = solve_eq_qp(&qp)?;
    Ok((
        quat_from_slice(&sol.x.as_slice()[0..4]),
        quat_from_slice(&sol.x.as_slice()[4..8]),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxzbSolution {
    pub x: UnitDualQuaternion,
    pub z: UnitDualQuaternion,
    pub x_pose: Pose,
    pub z_pose: Pose,
    pub branch: Branch,
    pub sigma1: f64,
    pub multiplicity: usize,
    pub residual: DualNumber,
    pub gamma: f64,
    pub warnings: Vec<String>,
}

/// The full `A X = Z B` pipeline.
pub fn solve(m: &MeasurementSet, opts: &SolverOptions) -> Result<AxzbSolution> {
    opts.validate()?;
    let mut warnings = Vec::new();
    if m.is_underdetermined() {
        warnings.push(format!(
            "only {} measurement(s): X and Z are underdetermined",
            m.len()
        ));
    }
    let k = build_matrices(m);
    let stage = rotation_stage(&k, m.len(), opts.noiseless_tol, opts.cluster_tol);
    let (branch, (x_st, x_inf, z_st, z_inf)) = if stage.noiseless {
        (
            Branch::Noiseless,
            solve_noiseless(m, &stage.basis, opts.gamma, &opts.sphere)?,
        )
    } else {
        (Branch::Noisy, solve_noisy(m, &k, &stage.basis)?)
    };
    let mut x = UnitDualQuaternion::from_parts_projected(x_st, x_inf);
    let mut z = UnitDualQuaternion::from_parts_projected(z_st, z_inf);
    if !x.standard().sign_is_canonical() {
        x = -x;
        z = -z;
    }
    Ok(AxzbSolution {
        residual: residual_axzb(m.pairs(), &x, &z),
        x_pose: dq_to_pose(&x)?,
        z_pose: dq_to_pose(&z)?,
        x,
        z,
        branch,
        sigma1: stage.sigma1(),
        multiplicity: stage.basis.multiplicity(),
        gamma: opts.gamma,
        warnings,
    })
}
