//! Minimization of a quadratic objective over the unit sphere in `R^k`
//! coupled with an inner equality-constrained QP.
//!
//! For a unit `y` the inner variable `w` solves
//!
//! ```text
//! min  wᵀ H w + 2 wᵀ B y + yᵀ D y
//! s.t. (G_j y)ᵀ w = 0   for every constraint map G_j
//! ```
//!
//! and `φ(y)` is the optimal value. `φ(y) = φ(-y)` since `(y, w) → (-y, -w)`
//! preserves both the objective and the constraints. For `k = 1` the sphere
//! is `{1, -1}` and `y = 1` is returned. For `k ≥ 2` the sphere is sampled
//! densely with a deterministic point set and the best samples are polished
//! by Riemannian gradient descent with Armijo backtracking; the gradient
//! comes from the envelope theorem:
//!
//! ```text
//! ∇φ(y) = 2 Bᵀ w + 2 D y + 2 Σ_j μ_j G_jᵀ w
//! ```

use nalgebra::{DMatrix, DVector};

use super::eig::canonical_column_sign;
use super::qp::{solve_kkt, EqConstrainedQp, QpSolution};
use crate::error::{CalibError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereCoupledProblem {
    /// m x m, positive definite.
    pub hessian: DMatrix<f64>,
    /// m x k.
    pub coupling: DMatrix<f64>,
    /// k x k, symmetric.
    pub outer: DMatrix<f64>,
    /// Each m x k.
    pub constraint_maps: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOptions {
    /// Sample count on the circle (k = 2).
    pub circle_samples: usize,
    /// Sample count on S² / S³ (k = 3, 4).
    pub sphere_samples: usize,
    /// Number of best samples that get refined.
    pub refine_starts: usize,
    pub max_iterations: usize,
    /// Stop when `‖P∇φ‖ ≤ gradient_tol * problem_scale`.
    pub gradient_tol: f64,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            circle_samples: 1024,
            sphere_samples: 4096,
            refine_starts: 6,
            max_iterations: 500,
            gradient_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSolution {
    pub y: DVector<f64>,
    pub inner: DVector<f64>,
    pub value: f64,
    pub projected_gradient_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Evaluation {
    value: f64,
    inner: QpSolution,
}

impl SphereCoupledProblem {
    pub fn dimension(&self) -> usize {
        self.coupling.ncols()
    }

    pub fn inner_dimension(&self) -> usize {
        self.hessian.nrows()
    }

    fn validate(&self) -> Result<()> {
        let m = self.inner_dimension();
        let k = self.dimension();
        if !(1..=4).contains(&k) {
            return Err(CalibError::InvalidParameter(format!(
                "sphere dimension must be 1..=4, got {k}"
            )));
        }
        let ok = self.hessian.ncols() == m
            && self.coupling.nrows() == m
            && self.outer.nrows() == k
            && self.outer.ncols() == k
            && self
                .constraint_maps
                .iter()
                .all(|g| g.nrows() == m && g.ncols() == k);
        if !ok {
            return Err(CalibError::InvalidParameter(
                "sphere-coupled problem dimensions disagree".into(),
            ));
        }
        Ok(())
    }

    /// Inner QP at `y`.
    pub fn inner_qp(&self, y: &DVector<f64>) -> EqConstrainedQp {
        let m = self.inner_dimension();
        let mut constraints = DMatrix::zeros(self.constraint_maps.len(), m);
        for (j, g) in self.constraint_maps.iter().enumerate() {
            constraints.set_row(j, &(g * y).transpose());
        }
        EqConstrainedQp::new(self.hessian.clone(), &self.coupling * y, constraints)
    }

    /// `yᵀ D y`.
    pub fn outer_term(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.outer * y))
    }

    /// `φ(y)`.
    pub fn value(&self, y: &DVector<f64>) -> Result<f64> {
        Ok(self.evaluate(y)?.value)
    }

    fn evaluate(&self, y: &DVector<f64>) -> Result<Evaluation> {
        let inner = solve_kkt(&self.inner_qp(y))?;
        Ok(Evaluation {
            value: inner.value + self.outer_term(y),
            inner,
        })
    }

    fn gradient(&self, y: &DVector<f64>, eval: &Evaluation) -> DVector<f64> {
        let w = &eval.inner.x;
        let mut g = self.coupling.transpose() * w + &self.outer * y;
        for (j, map) in self.constraint_maps.iter().enumerate() {
            g += map.transpose() * w * eval.inner.multipliers[j];
        }
        g * 2.0
    }

    fn scale(&self) -> f64 {
        [
            self.hessian.amax(),
            self.coupling.amax(),
            self.outer.amax(),
            1.0,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn project(y: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    g - y * y.dot(g)
}

/// Deterministic near-uniform points on the unit sphere in `R^k`.
///
/// k = 2: `count` equally spaced angles on the half circle (the objective is
/// antipodally symmetric). k = 3: Fibonacci lattice. k = 4: Halton triples
/// mapped through Shoemake's uniform-quaternion construction.
pub fn sphere_samples(k: usize, count: usize) -> Vec<DVector<f64>> {
    match k {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        4 => (1..=count)
            .map(|i| {
                let (u1, u2, u3) = (halton(i, 2), halton(i, 3), halton(i, 5));
                let tau = 2.0 * std::f64::consts::PI;
                let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
                DVector::from_vec(vec![
                    a * (tau * u2).sin(),
                    a * (tau * u2).cos(),
                    b * (tau * u3).sin(),
                    b * (tau * u3).cos(),
                ])
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

pub fn solve_sphere_coupled(p: &SphereCoupledProblem) -> Result<SphereSolution> {
    solve_sphere_coupled_with(p, &SphereOptions::default())
}

pub fn solve_sphere_coupled_with(
    p: &SphereCoupledProblem,
    opts: &SphereOptions,
) -> Result<SphereSolution> {
    p.validate()?;
    let k = p.dimension();
    if k == 1 {
        let y = DVector::from_element(1, 1.0);
        let eval = p.evaluate(&y)?;
        return Ok(SphereSolution {
            y,
            inner: eval.inner.x,
            value: eval.value,
            projected_gradient_norm: 0.0,
            iterations: 0,
        });
    }

    let count = if k == 2 {
        opts.circle_samples
    } else {
        opts.sphere_samples
    };
    let mut scored: Vec<(f64, DVector<f64>)> = sphere_samples(k, count)
        .into_iter()
        .filter_map(|y| p.evaluate(&y).ok().map(|e| (e.value, y)))
        .collect();
    if scored.is_empty() {
        return Err(CalibError::SingularKkt {
            reason: "inner QP failed at every sample".into(),
        });
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut starts: Vec<DVector<f64>> = Vec::new();
    for (_, y) in &scored {
        if starts.len() >= opts.refine_starts {
            break;
        }
        // Skip samples that are neighbours (or antipodes) of an accepted start.
        if starts.iter().all(|s| s.dot(y).abs() < 0.999) {
            starts.push(y.clone());
        }
    }

    let tol = opts.gradient_tol * p.scale();
    let mut best: Option<SphereSolution> = None;
    for start in starts {
        let sol = refine(p, start, tol, opts.max_iterations)?;
        if best.as_ref().is_none_or(|b| sol.value < b.value) {
            best = Some(sol);
        }
    }
    let mut best = best.expect("at least one start");
    if canonical_column_sign(best.y.as_slice()) {
        best.y = -best.y;
        best.inner = -best.inner;
    }
    Ok(best)
}

fn refine(
    p: &SphereCoupledProblem,
    start: DVector<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<SphereSolution> {
    const ARMIJO: f64 = 1e-4;
    let mut y = start;
    let mut eval = p.evaluate(&y)?;
    let mut pg = project(&y, &p.gradient(&y, &eval));
    let mut step = 1.0 / p.scale();
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut iterations = 0;

    while iterations < max_iterations && pg.norm() > tol {
        iterations += 1;
        if let Some((py, ppg)) = &prev {
            let s = &y - py;
            let r = &pg - ppg;
            let sr = s.dot(&r).abs();
            if sr > 0.0 {
                step = s.norm_squared() / sr;
            }
        }
        let g2 = pg.norm_squared();
        let mut accepted = None;
        let mut trial_step = step;
        for _ in 0..60 {
            let cand = (&y - &pg * trial_step).normalize();
            if let Ok(e) = p.evaluate(&cand) {
                if e.value <= eval.value - ARMIJO * trial_step * g2 {
                    accepted = Some((cand, e));
                    break;
                }
            }
            trial_step *= 0.5;
        }
        if accepted.is_none() {
            // Value decreases are below floating-point resolution: accept a
            // step that shrinks the projected gradient instead.
            let slack = 64.0 * f64::EPSILON * eval.value.abs().max(p.scale());
            let mut trial_step = step;
            for _ in 0..60 {
                let cand = (&y - &pg * trial_step).normalize();
                if let Ok(e) = p.evaluate(&cand) {
                    let cand_pg = project(&cand, &p.gradient(&cand, &e));
                    if e.value <= eval.value + slack && cand_pg.norm() < pg.norm() {
                        accepted = Some((cand, e));
                        break;
                    }
                }
                trial_step *= 0.5;
            }
        }
        let Some((cand, e)) = accepted else {
            break;
        };
        prev = Some((y, pg));
        y = cand;
        eval = e;
        pg = project(&y, &p.gradient(&y, &eval));
        step = trial_step;
    }

    Ok(SphereSolution {
        y,
        inner: eval.inner.x,
        value: eval.value,
        projected_gradient_norm: pg.norm(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// φ(θ) = a cos(2(θ - θ*)) with no inner coupling: minimized at θ* + π/2.
    fn cos_problem(theta_star: f64, amplitude: f64) -> SphereCoupledProblem {
        // yᵀ D y with D = a R diag(1, -1) Rᵀ, R rotation by θ*, equals
        // a cos(2(θ - θ*)).
        let (s, c) = theta_star.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let d = &r * DMatrix::from_row_slice(2, 2, &[amplitude, 0.0, 0.0, -amplitude]) * r.transpose();
        SphereCoupledProblem {
            hessian: DMatrix::identity(2, 2),
            coupling: DMatrix::zeros(2, 2),
            outer: d,
            constraint_maps: vec![DMatrix::identity(2, 2)],
        }
    }

    #[test]
    fn one_dimensional_returns_plus_one() {
        let p = SphereCoupledProblem {
            hessian: DMatrix::identity(3, 3),
            coupling: DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
            outer: DMatrix::from_element(1, 1, 2.0),
            constraint_maps: vec![DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0])],
        };
        let s = solve_sphere_coupled(&p).unwrap();
        assert_eq!(s.y[0], 1.0);
        assert!((s.inner[0] + 1.0).abs() < 1e-14);
        assert!((s.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recovers_analytic_minimizer_on_circle() {
        for theta_star in [0.1, 0.77, 1.3, 2.9] {
            let p = cos_problem(theta_star, 1.5);
            let s = solve_sphere_coupled(&p).unwrap();
            let expected = theta_star + std::f64::consts::FRAC_PI_2;
            let got = s.y[1].atan2(s.y[0]);
            // Compare modulo π (antipodal symmetry).
            let diff = (got - expected).rem_euclid(std::f64::consts::PI);
            let diff = diff.min(std::f64::consts::PI - diff);
            assert!(diff <= 1e-8, "θ* = {theta_star}: diff {diff:e}");
            assert!(s.projected_gradient_norm <= 1.5e-10, "pg {:e} it {}", s.projected_gradient_norm, s.iterations);
            assert!((s.value + 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_points_are_unit() {
        for k in 2..=4 {
            for y in sphere_samples(k, 256) {
                assert!((y.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn no_sample_beats_the_optimum() {
        // A coupled problem with nontrivial inner solutions in k = 3.
        let mut h = DMatrix::identity(4, 4) * 2.0;
        h[(0, 1)] = 0.3;
        h[(1, 0)] = 0.3;
        let coupling = DMatrix::from_row_slice(4, 3, &[
            1.0, -0.5, 0.2, //
            0.0, 0.7, -1.1, //
            0.4, 0.0, 0.9, //
            -0.3, 0.6, 0.1,
        ]);
        let outer = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, -0.2, 0.3, 0.0, 0.3, 0.4]);
        let g = DMatrix::from_row_slice(4, 3, &[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, 0.0, 0.0,
        ]);
        let p = SphereCoupledProblem {
            hessian: h,
            coupling,
            outer,
            constraint_maps: vec![g],
        };
        let s = solve_sphere_coupled(&p).unwrap();
        for y in sphere_samples(3, 256) {
            assert!(s.value <= p.value(&y).unwrap() + 1e-8);
        }
        // Inner solution is feasible for the returned y.
        let qp = p.inner_qp(&s.y);
        assert!((&qp.constraints * &s.inner).amax() < 1e-12);
    }
}
