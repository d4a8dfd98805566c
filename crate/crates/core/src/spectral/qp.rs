use nalgebra::{DMatrix, DVector};

use crate::error::{CalibError, Result};

/// `min xᵀHx + 2cᵀx  s.t.  Cx = 0` with `H` symmetric and positive definite
/// on the null space of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqConstrainedQp {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    /// One constraint per row; may have zero rows.
    pub constraints: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers `μ` of the stationarity condition `Hx + c + Cᵀμ = 0`.
    pub multipliers: DVector<f64>,
    /// Optimal objective `xᵀHx + 2cᵀx`.
    pub value: f64,
}

impl EqConstrainedQp {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>, constraints: DMatrix<f64>) -> Self {
        Self {
            hessian,
            linear,
            constraints,
        }
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.hessian * x)) + 2.0 * self.linear.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.hessian.nrows();
        if self.hessian.ncols() != n || self.linear.len() != n || self.constraints.ncols() != n {
            return Err(CalibError::InvalidParameter(format!(
                "QP dimensions disagree: H {}x{}, c {}, C {}x{}",
                self.hessian.nrows(),
                self.hessian.ncols(),
                self.linear.len(),
                self.constraints.nrows(),
                self.constraints.ncols()
            )));
        }
        let scale = self.hessian.amax().max(1.0);
        let asym = (&self.hessian - self.hessian.transpose()).amax();
        if !asym.is_finite() || asym > 1e-12 * scale {
            return Err(CalibError::NotSymmetric { asymmetry: asym });
        }
        if self.constraints.nrows() > 0 {
            let sv = self.constraints.clone().svd(false, false).singular_values;
            let max = sv.max();
            let min = sv.min();
            if self.constraints.nrows() > n || !(min > 1e-12 * max.max(1e-300)) {
                return Err(CalibError::SingularKkt {
                    reason: format!("constraint rows are dependent (σ_min = {min:e})"),
                });
            }
        }
        Ok(())
    }
}

/// Solves the KKT system `[H Cᵀ; C 0] [x; μ] = [-c; 0]` by LU with one step
/// of iterative refinement.
pub fn solve_eq_qp(p: &EqConstrainedQp) -> Result<QpSolution> {
    p.validate()?;
    if !reduced_hessian_is_pd(p) {
        return Err(CalibError::SingularKkt {
            reason: "Hessian is not positive definite on the constraint null space".into(),
        });
    }
    solve_kkt(p)
}

fn reduced_hessian_is_pd(p: &EqConstrainedQp) -> bool {
    let n = p.hessian.nrows();
    let m = p.constraints.nrows();
    if m == 0 {
        return p.hessian.clone().cholesky().is_some();
    }
    if m == n {
        return true;
    }
    // Orthonormal complement of the row space of C from a full QR of Cᵀ.
    let mut padded = DMatrix::zeros(n, n);
    padded
        .view_mut((0, 0), (n, m))
        .copy_from(&p.constraints.transpose());
    let q = padded.qr().q();
    let basis = q.columns(m, n - m).into_owned();
    let reduced = basis.transpose() * &p.hessian * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let scale = p.hessian.amax().max(1e-300);
    reduced
        .symmetric_eigenvalues()
        .iter()
        .all(|&v| v > 1e-14 * scale)
}

/// KKT solve without the validation pass; used in hot loops where the
/// problem structure is known to be well posed.
pub(crate) fn solve_kkt(p: &EqConstrainedQp) -> Result<QpSolution> {
    let n = p.hessian.nrows();
    let m = p.constraints.nrows();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
    if m > 0 {
        kkt.view_mut((0, n), (n, m))
            .copy_from(&p.constraints.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&p.constraints);
    }
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-&p.linear));

    let lu = kkt.clone().lu();
    let mut sol = lu.solve(&rhs).ok_or_else(|| CalibError::SingularKkt {
        reason: "LU factorization is singular".into(),
    })?;
    let residual = &rhs - &kkt * &sol;
    if let Some(corr) = lu.solve(&residual) {
        sol += corr;
    }
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(CalibError::SingularKkt {
            reason: "non-finite KKT solution".into(),
        });
    }
    let x = sol.rows(0, n).into_owned();
    let multipliers = sol.rows(n, m).into_owned();
    let value = p.objective(&x);
    Ok(QpSolution {
        x,
        multipliers,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent route: minimize over a null-space parameterization
    /// `x = N z` with `N` from the SVD of `C`.
    fn null_space_oracle(p: &EqConstrainedQp) -> DVector<f64> {
        let n = p.hessian.nrows();
        let m = p.constraints.nrows();
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(&p.constraints);
        let svd = padded.svd(false, true);
        let vt = svd.v_t.unwrap();
        // Right singular vectors with zero singular value span null(C).
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let null_rows: Vec<usize> = order[m..].to_vec();
        let basis = DMatrix::from_fn(n, n - m, |r, c| vt[(null_rows[c], r)]);
        let reduced_h = basis.transpose() * &p.hessian * &basis;
        let reduced_c = basis.transpose() * &p.linear;
        let z = reduced_h.lu().solve(&(-reduced_c)).unwrap();
        basis * z
    }

    fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn unconstrained_identity() {
        let p = EqConstrainedQp::new(DMatrix::identity(3, 3), DVector::zeros(3), DMatrix::zeros(0, 3));
        let s = solve_eq_qp(&p).unwrap();
        assert_eq!(s.x, DVector::zeros(3));
    }

    #[test]
    fn gradient_fully_constrained() {
        let c = DVector::from_vec(vec![-1.0, 0.0, 0.0]);
        let cons = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let s = solve_eq_qp(&EqConstrainedQp::new(DMatrix::identity(3, 3), c, cons)).unwrap();
        assert!(s.x.amax() <= 1e-15);
    }

    #[test]
    fn dependent_constraints_are_rejected() {
        let cons = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 0.0]);
        let p = EqConstrainedQp::new(DMatrix::identity(3, 3), DVector::zeros(3), cons);
        assert!(matches!(solve_eq_qp(&p), Err(CalibError::SingularKkt { .. })));
    }

    #[test]
    fn matches_null_space_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..200 {
            let n = 2 + trial % 7;
            let m = trial % n;
            let h = random_spd(&mut rng, n);
            let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let cons = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let p = EqConstrainedQp::new(h, c, cons);
            let s = solve_eq_qp(&p).unwrap();
            let oracle = null_space_oracle(&p);
            assert!((&s.x - &oracle).amax() <= 1e-9, "trial {trial}");
            // Feasibility and stationarity.
            assert!((&p.constraints * &s.x).amax() <= 1e-12);
            let stat = &p.hessian * &s.x + &p.linear + p.constraints.transpose() * &s.multipliers;
            assert!(stat.amax() <= 1e-10);
            assert!((s.value - p.objective(&oracle)).abs() <= 1e-9 * (1.0 + s.value.abs()));
        }
    }
}
