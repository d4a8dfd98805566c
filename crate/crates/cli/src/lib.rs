//! Command-line front end: pose-pair files in, calibration results out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dqcalib::harness::{
    canonicalize_axxb, canonicalize_axzb, make_measurement_poses, make_motion_poses, parallel_poses,
    random_measurement_poses, robustness_sweep, Equation, GroundTruth, SweepConfig, PRINTED_A,
    PRINTED_ROTATION_TOL,
};
use dqcalib::{
    axxb, axzb, CalibError, MeasurementSet, MotionSet, Pose, SolverOptions, DEFAULT_GAMMA,
    DEFAULT_NOISELESS_TOL,
};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
/// Allowed deviation of the homogeneous bottom row from `(0, 0, 0, 1)`.
pub const BOTTOM_ROW_TOL: f64 = 1e-9;

pub type Matrix = [[f64; 4]; 4];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("{0}")]
    Validation(CalibError),
    #[error("numerical failure: {0}")]
    Numerical(CalibError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<CalibError> for CliError {
    fn from(e: CalibError) -> Self {
        match e {
            CalibError::SingularKkt { .. } | CalibError::NotSymmetric { .. } => CliError::Numerical(e),
            _ => CliError::Validation(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What the records of a pose-pair file hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// Absolute measurements `(A⁽ⁱ⁾, B⁽ⁱ⁾)` of `A X = Z B`.
    #[default]
    Measurements,
    /// Relative motions `(A⁽ⁱ⁾, B⁽ⁱ⁾)` of `A X = X B`.
    Motions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePair {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    #[serde(rename = "X")]
    pub x: Matrix,
    #[serde(rename = "Z")]
    pub z: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePairFile {
    pub format_version: u32,
    #[serde(default)]
    pub kind: PairKind,
    pub pairs: Vec<PosePair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: u32,
    pub equation: String,
    #[serde(rename = "X")]
    pub x: Matrix,
    #[serde(rename = "Z", default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Matrix>,
    pub branch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<f64>,
    pub multiplicity: usize,
    pub residual_standard: f64,
    pub residual_infinitesimal: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(name = "dqcalib", version, about = "Dual quaternion hand-eye calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve A X = X B from a pose-pair file.
    SolveAxxb(SolveArgs),
    /// Solve A X = Z B from a measurement file.
    SolveAxzb(SolveArgs),
    /// Write a fixture as a pose-pair file.
    Generate(GenerateArgs),
    /// Run the noise sweep and print CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Regularization weight of the noiseless branch.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Per-relation threshold for the rotationwise-noiseless test.
    #[arg(long = "tol-noiseless", default_value_t = DEFAULT_NOISELESS_TOL)]
    pub tol_noiseless: f64,
}

impl SolverFlags {
    fn options(&self) -> SolverOptions {
        SolverOptions::default()
            .with_gamma(self.gamma)
            .with_noiseless_tol(self.tol_noiseless)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Pose-pair file (JSON).
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Zero the translation component along this axis (`x`, `y`, `z` or `a,b,c`).
    #[arg(long = "canonicalize-axis", value_parser = parse_axis)]
    pub canonicalize_axis: Option<Vector3<f64>>,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    PaperNonparallel,
    PaperParallel,
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub fixture: Fixture,
    /// Number of measurements for `random`.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit relative motions (all pairs i < j) instead of measurements.
    #[arg(long, value_enum, default_value_t = PairKind::Measurements)]
    pub kind: PairKind,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EquationArg {
    Axxb,
    Axzb,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "sigma-max", default_value_t = 0.02)]
    pub sigma_max: f64,
    #[arg(long = "sigma-step", default_value_t = 0.002)]
    pub sigma_step: f64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EquationArg::Axxb)]
    pub equation: EquationArg,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn parse_axis(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let v = match s.trim().to_ascii_lowercase().as_str() {
        "x" => Vector3::x(),
        "y" => Vector3::y(),
        "z" => Vector3::z(),
        other => {
            let parts: Vec<f64> = other
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format!("bad axis component: {e}"))?;
            if parts.len() != 3 {
                return Err(format!("axis needs 3 components, got {}", parts.len()));
            }
            Vector3::new(parts[0], parts[1], parts[2])
        }
    };
    if !(v.norm() > 0.0 && v.norm().is_finite()) {
        return Err("axis must be a nonzero finite vector".into());
    }
    Ok(v)
}

fn read_file(path: &Path) -> CliResult<PosePairFile> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pose_pair_file(&text)
}

pub fn parse_pose_pair_file(text: &str) -> CliResult<PosePairFile> {
    let file: PosePairFile =
        serde_json::from_str(text).map_err(|e| CliError::MalformedInput(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::MalformedInput(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    Ok(file)
}

fn to_pose(m: &Matrix, what: &str) -> CliResult<Pose> {
    let bottom = [0.0, 0.0, 0.0, 1.0];
    if m[3].iter().zip(bottom).any(|(v, e)| !((v - e).abs() <= BOTTOM_ROW_TOL)) {
        return Err(CliError::MalformedInput(format!(
            "{what}: bottom row {:?} is not (0, 0, 0, 1)",
            m[3]
        )));
    }
    Pose::from_rows(m, PRINTED_ROTATION_TOL).map_err(|e| match e {
        CalibError::NotARotation { reason } => CliError::Validation(CalibError::NotARotation {
            reason: format!("{what}: {reason}"),
        }),
        other => other.into(),
    })
}

pub fn file_poses(file: &PosePairFile) -> CliResult<Vec<(Pose, Pose)>> {
    file.pairs
        .iter()
        .enumerate()
        .map(|(i, p)| Ok((to_pose(&p.a, &format!("pair {i} A"))?, to_pose(&p.b, &format!("pair {i} B"))?)))
        .collect()
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn cmd_solve_axxb(args: &SolveArgs) -> CliResult<ResultFile> {
    let file = read_file(&args.input)?;
    if file.pairs.is_empty() {
        return Err(CalibError::EmptyInput("pose-pair file has no pairs").into());
    }
    let poses = file_poses(&file)?;
    let motions = match file.kind {
        PairKind::Motions => poses,
        PairKind::Measurements => make_motion_poses(&poses)?,
    };
    let mut sol = axxb::solve(&MotionSet::from_poses(&motions)?, &args.solver.options())?;
    if let Some(axis) = &args.canonicalize_axis {
        sol = canonicalize_axxb(&sol, axis)?;
    }
    let result = ResultFile {
        format_version: FORMAT_VERSION,
        equation: "axxb".into(),
        x: sol.pose.rows(),
        z: None,
        branch: sol.branch.to_string(),
        lambda0: Some(sol.lambda0),
        sigma1: None,
        multiplicity: sol.multiplicity,
        residual_standard: sol.residual.standard,
        residual_infinitesimal: sol.residual.infinitesimal,
        gamma: sol.gamma,
        warnings: Vec::new(),
    };
    write_output(args.output.as_deref(), &to_json(&result))?;
    Ok(result)
}

pub fn cmd_solve_axzb(args: &SolveArgs) -> CliResult<ResultFile> {
    let file = read_file(&args.input)?;
    if file.kind == PairKind::Motions {
        return Err(CliError::MalformedInput(
            "A X = Z B needs a measurement file, got relative motions".into(),
        ));
    }
    if file.pairs.is_empty() {
        return Err(CalibError::EmptyInput("pose-pair file has no pairs").into());
    }
    let poses = file_poses(&file)?;
    let mut sol = axzb::solve(&MeasurementSet::from_poses(&poses)?, &args.solver.options())?;
    if let Some(axis) = &args.canonicalize_axis {
        sol = canonicalize_axzb(&sol, axis)?;
    }
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    let result = ResultFile {
        format_version: FORMAT_VERSION,
        equation: "axzb".into(),
        x: sol.x_pose.rows(),
        z: Some(sol.z_pose.rows()),
        branch: sol.branch.to_string(),
        lambda0: None,
        sigma1: Some(sol.sigma1),
        multiplicity: sol.multiplicity,
        residual_standard: sol.residual.standard,
        residual_infinitesimal: sol.residual.infinitesimal,
        gamma: sol.gamma,
        warnings: sol.warnings.clone(),
    };
    write_output(args.output.as_deref(), &to_json(&result))?;
    Ok(result)
}

fn pose_pairs_to_records(pairs: &[(Pose, Pose)]) -> Vec<PosePair> {
    pairs
        .iter()
        .map(|(a, b)| PosePair {
            a: a.rows(),
            b: b.rows(),
        })
        .collect()
}

pub fn build_fixture(args: &GenerateArgs) -> CliResult<PosePairFile> {
    let (gt, a_poses, printed_a) = match args.fixture {
        Fixture::PaperNonparallel => {
            let a = PRINTED_A
                .iter()
                .map(|m| Pose::from_rows(m, PRINTED_ROTATION_TOL))
                .collect::<dqcalib::Result<Vec<_>>>()?;
            (GroundTruth::paper(), a, true)
        }
        Fixture::PaperParallel => (GroundTruth::paper(), parallel_poses(), false),
        Fixture::Random => {
            if args.n == 0 {
                return Err(CalibError::TooFewMeasurements { required: 1, got: 0 }.into());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let gt = GroundTruth::random(&mut rng);
            let a = random_measurement_poses(&mut rng, args.n);
            (gt, a, false)
        }
    };
    let measurements = make_measurement_poses(&gt, &a_poses);
    let mut pairs = match args.kind {
        PairKind::Measurements => pose_pairs_to_records(&measurements),
        PairKind::Motions => pose_pairs_to_records(&make_motion_poses(&measurements)?),
    };
    if printed_a && args.kind == PairKind::Measurements {
        for (rec, a) in pairs.iter_mut().zip(PRINTED_A) {
            rec.a = a;
        }
    }
    Ok(PosePairFile {
        format_version: FORMAT_VERSION,
        kind: args.kind,
        pairs,
        ground_truth: Some(GroundTruthRecord {
            x: gt.x.rows(),
            z: gt.z.rows(),
        }),
    })
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<PosePairFile> {
    let file = build_fixture(args)?;
    write_output(args.output.as_deref(), &to_json(&file))?;
    Ok(file)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let cfg = SweepConfig {
        sigma_max: args.sigma_max,
        sigma_step: args.sigma_step,
        runs: args.runs,
        seed: args.seed,
        equation: match args.equation {
            EquationArg::Axxb => Equation::Axxb,
            EquationArg::Axzb => Equation::Axzb,
        },
        options: args.solver.options(),
    };
    let csv = robustness_sweep(&cfg)?.to_csv();
    write_output(args.output.as_deref(), &csv)?;
    Ok(csv)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::SolveAxxb(a) => cmd_solve_axxb(a).map(|_| ()),
        Command::SolveAxzb(a) => cmd_solve_axzb(a).map(|_| ()),
        Command::Generate(a) => cmd_generate(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
    }
}
