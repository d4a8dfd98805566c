use nalgebra::{Matrix4, Matrix4xX, Vector4};

use crate::error::{CalibError, Result};
use crate::quat::Mat4;

/// Default relative tolerance for merging eigenvalues / singular values into
/// the extremal cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// An extremal eigenvalue together with an orthonormal basis of the
/// eigenvectors whose eigenvalues cluster with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub value: f64,
    /// 4 x k, orthonormal columns.
    pub basis: Matrix4xX<f64>,
    /// All eigenvalues, ascending.
    pub spectrum: Vector4<f64>,
}

impl SpectralBasis {
    pub fn multiplicity(&self) -> usize {
        self.basis.ncols()
    }
}

/// Flips `v` so that its largest-magnitude entry is positive. Returns whether
/// it flipped.
pub(crate) fn canonical_column_sign(v: &[f64]) -> bool {
    let mut best = 0.0f64;
    let mut best_val = 0.0;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            best_val = x;
        }
    }
    best_val < 0.0
}

/// Extremal eigenpair of a symmetric 4x4 matrix, with the eigenspace of every
/// eigenvalue within `cluster_tol * max(1, |value|)` of the extremum.
///
/// Basis columns are ordered by eigenvalue (closest to the extremum first)
/// and sign-normalized so that each column's largest-magnitude entry is
/// positive.
pub fn sym_extremal_eig(s: &Mat4, which: Extremum, cluster_tol: f64) -> Result<SpectralBasis> {
    let scale = s.amax().max(1.0);
    let asymmetry = (s - s.transpose()).amax();
    if !asymmetry.is_finite() || asymmetry > 1e-10 * scale {
        return Err(CalibError::NotSymmetric { asymmetry });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum = Vector4::from_fn(|i, _| eig.eigenvalues[order[i]]);
    if which == Extremum::Max {
        order.reverse();
    }
    let value = eig.eigenvalues[order[0]];
    let band = cluster_tol * value.abs().max(1.0);
    let members: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| (eig.eigenvalues[i] - value).abs() <= band)
        .collect();

    let mut basis = Matrix4xX::zeros(members.len());
    for (col, &i) in members.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if canonical_column_sign(v.as_slice()) {
            v = -v;
        }
        basis.set_column(col, &v);
    }
    Ok(SpectralBasis {
        value,
        basis,
        spectrum,
    })
}

/// `K = U diag(σ) Vᵀ` with `σ` nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd4 {
    pub u: Matrix4<f64>,
    pub singular_values: Vector4<f64>,
    pub v: Matrix4<f64>,
}

/// Left/right singular vectors of the largest singular value, paired so
/// that `K right[:, j] = value * left[:, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBasis {
    pub value: f64,
    pub left: Matrix4xX<f64>,
    pub right: Matrix4xX<f64>,
    pub singular_values: Vector4<f64>,
}

impl PairedBasis {
    pub fn multiplicity(&self) -> usize {
        self.left.ncols()
    }
}

/// Full SVD of a 4x4 matrix with deterministic ordering and signs: each
/// column of `U` has its largest-magnitude entry positive and the matching
/// column of `V` is flipped along with it.
pub fn svd4(k: &Mat4) -> Svd4 {
    let svd = k.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let sv = svd.singular_values;

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut out_u = Matrix4::zeros();
    let mut out_v = Matrix4::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let mut uc = u.column(src).into_owned();
        let mut vc = v.column(src).into_owned();
        if canonical_column_sign(uc.as_slice()) {
            uc = -uc;
            vc = -vc;
        }
        out_u.set_column(dst, &uc);
        out_v.set_column(dst, &vc);
    }
    Svd4 {
        u: out_u,
        singular_values: Vector4::from_fn(|i, _| sv[order[i]]),
        v: out_v,
    }
}

impl Svd4 {
    /// Singular vector pairs of `σ₁`, merging every singular value within
    /// `cluster_tol * max(1, σ₁)` of it.
    pub fn top_basis(&self, cluster_tol: f64) -> PairedBasis {
        let value = self.singular_values[0];
        let band = cluster_tol * value.abs().max(1.0);
        let k = (0..4)
            .take_while(|&i| (value - self.singular_values[i]).abs() <= band)
            .count();
        PairedBasis {
            value,
            left: self.u.columns(0, k).into_owned().into(),
            right: self.v.columns(0, k).into_owned().into(),
            singular_values: self.singular_values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut impl Rng) -> Mat4 {
        let a = Mat4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        a + a.transpose()
    }

    #[test]
    fn zero_matrix_has_full_multiplicity() {
        let b = sym_extremal_eig(&Mat4::zeros(), Extremum::Min, CLUSTER_TOL).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.multiplicity(), 4);
    }

    #[test]
    fn diagonal_minimum() {
        let s = Mat4::from_diagonal(&Vector4::new(0.0, 1.0, 2.0, 3.0));
        let b = sym_extremal_eig(&s, Extremum::Min, CLUSTER_TOL).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.multiplicity(), 1);
        assert_eq!(b.basis.column(0).into_owned(), Vector4::new(1.0, 0.0, 0.0, 0.0));
        let top = sym_extremal_eig(&s, Extremum::Max, CLUSTER_TOL).unwrap();
        assert_eq!(top.value, 3.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut s = Mat4::identity();
        s[(0, 1)] = 1.0;
        assert!(matches!(
            sym_extremal_eig(&s, Extremum::Min, CLUSTER_TOL),
            Err(CalibError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eigen_basis_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let s = random_sym(&mut rng);
            for which in [Extremum::Min, Extremum::Max] {
                let b = sym_extremal_eig(&s, which, CLUSTER_TOL).unwrap();
                let q = &b.basis;
                let k = q.ncols();
                assert!((q.transpose() * q - nalgebra::DMatrix::identity(k, k)).amax() <= 1e-10);
                assert!((s * q - q * b.value).amax() <= 1e-10);
            }
        }
    }

    #[test]
    fn repeated_eigenvalue_is_clustered() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let q = Mat4::from_fn(|_, _| rng.random_range(-1.0..1.0)).qr().q();
        let s = q * Mat4::from_diagonal(&Vector4::new(0.5, 0.5, 2.0, 3.0)) * q.transpose();
        let b = sym_extremal_eig(&s, Extremum::Min, CLUSTER_TOL).unwrap();
        assert_eq!(b.multiplicity(), 2);
    }

    #[test]
    fn svd_of_scaled_identity() {
        let svd = svd4(&(Mat4::identity() * 3.0));
        let top = svd.top_basis(CLUSTER_TOL);
        assert_eq!(top.value, 3.0);
        assert_eq!(top.multiplicity(), 4);
    }

    #[test]
    fn svd_properties_and_sign_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let k = Mat4::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let svd = svd4(&k);
            let recon = svd.u * Mat4::from_diagonal(&svd.singular_values) * svd.v.transpose();
            assert!((recon - k).amax() <= 1e-10);
            assert!((svd.u.transpose() * svd.u - Mat4::identity()).amax() <= 1e-10);
            assert!((svd.v.transpose() * svd.v - Mat4::identity()).amax() <= 1e-10);
            for i in 0..3 {
                assert!(svd.singular_values[i] >= svd.singular_values[i + 1]);
            }
            for c in 0..4 {
                let col = svd.u.column(c);
                let idx = col.iamax();
                assert!(col[idx] > 0.0);
            }
            let top = svd.top_basis(CLUSTER_TOL);
            assert!((k * &top.right - &top.left * top.value).amax() <= 1e-10);
        }
    }
}
