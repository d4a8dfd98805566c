//! Robustness sweep: average estimation error against measurement noise.

use std::fmt::Write;

use crate::axxb::{self, MotionSet};
use crate::axzb::{self, MeasurementSet};
use crate::error::{CalibError, Result};
use crate::pose::estimation_error;
use crate::solver::SolverOptions;

use super::fixtures::{make_measurement_poses, make_motion_poses, PaperFixtures};
use super::noise::{perturb_measurements, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Axxb,
    Axzb,
}

impl Equation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Equation::Axxb => "axxb",
            Equation::Axzb => "axzb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub sigma_max: f64,
    pub sigma_step: f64,
    pub runs: usize,
    pub seed: u64,
    pub equation: Equation,
    pub options: SolverOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigma_max: 0.02,
            sigma_step: 0.002,
            runs: 10,
            seed: 0,
            equation: Equation::Axxb,
            options: SolverOptions::default(),
        }
    }
}

impl SweepConfig {
    /// `0, step, 2 step, …` up to `sigma_max` (inclusive up to rounding).
    pub fn sigmas(&self) -> Result<Vec<f64>> {
        if !(self.sigma_step > 0.0 && self.sigma_step.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "sigma step must be positive, got {}",
                self.sigma_step
            )));
        }
        if !(self.sigma_max >= 0.0 && self.sigma_max.is_finite()) {
            return Err(CalibError::InvalidParameter(format!(
                "sigma max must be nonnegative, got {}",
                self.sigma_max
            )));
        }
        if self.runs == 0 {
            return Err(CalibError::InvalidParameter("runs must be positive".into()));
        }
        let count = (self.sigma_max / self.sigma_step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| i as f64 * self.sigma_step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub mean_e_x: f64,
    /// Absent for `A X = X B`.
    pub mean_e_z: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub equation: Equation,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "sigma,mean_e_X,mean_e_Z,runs";

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ez = r.mean_e_z.map(|v| format!("{v:.11e}")).unwrap_or_default();
            let _ = writeln!(out, "{:.11e},{:.11e},{},{}", r.sigma, r.mean_e_x, ez, r.runs);
        }
        out
    }
}

/// Per-cell seed so each `(σ, run)` draws an independent, reproducible stream.
fn cell_seed(master: u64, sigma_index: usize, run: usize) -> u64 {
    master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((sigma_index as u64) << 32) | run as u64)
}

/// Errors `(e_X, e_Z)` of one noisy run on the reference non-parallel
/// scenario. Errors are measured against the ground truth used to build the
/// data.
pub fn run_once(
    equation: Equation,
    sigma: f64,
    seed: u64,
    options: &SolverOptions,
) -> Result<(f64, Option<f64>)> {
    let fixtures = PaperFixtures::load();
    let gt = fixtures.ground_truth;
    let clean = make_measurement_poses(&gt, &fixtures.nonparallel);
    let noisy = perturb_measurements(&clean, &NoiseModel::new(sigma, seed)?)?;
    match equation {
        Equation::Axxb => {
            let motions = MotionSet::from_poses(&make_motion_poses(&noisy)?)?;
            let sol = axxb::solve(&motions, options)?;
            Ok((estimation_error(&sol.pose, &gt.x.homogeneous()), None))
        }
        Equation::Axzb => {
            let sol = axzb::solve(&MeasurementSet::from_poses(&noisy)?, options)?;
            Ok((
                estimation_error(&sol.x_pose, &gt.x.homogeneous()),
                Some(estimation_error(&sol.z_pose, &gt.z.homogeneous())),
            ))
        }
    }
}

pub fn robustness_sweep(cfg: &SweepConfig) -> Result<ErrorReport> {
    let mut rows = Vec::new();
    for (i, sigma) in cfg.sigmas()?.into_iter().enumerate() {
        let mut sum_x = 0.0;
        let mut sum_z = 0.0;
        for run in 0..cfg.runs {
            let (ex, ez) = run_once(cfg.equation, sigma, cell_seed(cfg.seed, i, run), &cfg.options)?;
            sum_x += ex;
            sum_z += ez.unwrap_or(0.0);
        }
        let runs = cfg.runs as f64;
        rows.push(SweepRow {
            sigma,
            mean_e_x: sum_x / runs,
            mean_e_z: (cfg.equation == Equation::Axzb).then_some(sum_z / runs),
            runs: cfg.runs,
        });
    }
    Ok(ErrorReport {
        equation: cfg.equation,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eleven_points() {
        let s = SweepConfig::default().sigmas().unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s[0], 0.0);
        assert!((s[10] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn bad_step_is_rejected() {
        let cfg = SweepConfig {
            sigma_step: 0.0,
            ..SweepConfig::default()
        };
        assert!(cfg.sigmas().is_err());
    }

    #[test]
    fn csv_layout() {
        let r = ErrorReport {
            equation: Equation::Axxb,
            rows: vec![SweepRow {
                sigma: 0.002,
                mean_e_x: 1.0 / 3.0,
                mean_e_z: None,
                runs: 10,
            }],
        };
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[2], "");
        assert!((fields[1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-11);
    }
}
