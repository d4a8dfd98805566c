//! Options and result vocabulary shared by the two calibration pipelines.

use std::fmt;

use crate::error::{CalibError, Result};
use crate::spectral::{SphereOptions, CLUSTER_TOL};

/// Regularization weight used in the reference experiments.
pub const DEFAULT_GAMMA: f64 = 2e-6;
/// Per-relation threshold on the rotation-stage optimum below which the data
/// count as rotationwise noiseless. Exact data sit at round-off (~1e-15);
/// Gaussian measurement noise of σ = 0.002 can push `n - σ₁` down to a few
/// 1e-7 per relation, so the cut sits well below that.
pub const DEFAULT_NOISELESS_TOL: f64 = 1e-9;

/// Which second-stage subproblem the pipeline solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Rotation stage optimum is zero: regularized QCQP.
    Noiseless,
    /// Rotation stage optimum is positive: eigenproblem plus patch.
    Noisy,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Noiseless => "noiseless",
            Branch::Noisy => "noisy",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gamma: f64,
    /// The rotation stage is noiseless iff its optimum is `≤ noiseless_tol * n`.
    pub noiseless_tol: f64,
    pub cluster_tol: f64,
    pub sphere: SphereOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            noiseless_tol: DEFAULT_NOISELESS_TOL,
            cluster_tol: CLUSTER_TOL,
            sphere: SphereOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_noiseless_tol(mut self, tol: f64) -> Self {
        self.noiseless_tol = tol;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.noiseless_tol >= 0.0 && self.noiseless_tol.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "noiseless tolerance must be nonnegative, got {}",
                self.noiseless_tol
            )));
        }
        if !(self.cluster_tol >= 0.0 && self.cluster_tol.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "cluster tolerance must be nonnegative, got {}",
                self.cluster_tol
            )));
        }
        Ok(())
    }
}
