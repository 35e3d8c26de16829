use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pide_control::discretization::{project_l2, SpatialGrid};
use pide_control::operators::OperatorContext;
use pide_control::pide_solver::{ControlWindow, KernelSpec, SolverContext, SpatialForm};
use pide_control::time::TimeGrid;

use crate::error::CliError;

/// Shipped reference configuration; also the default when no file is given.
pub const REFERENCE_EXPERIMENT: &str = include_str!("../examples/paper-experiment.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub control: ControlSource,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub final_time: f64,
    pub n_cells: usize,
    pub n_steps: usize,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub window: WindowConfig,
    pub initial_state: Profile,
    pub target: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Mass,
    Stiffness,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    None,
    /// `amplitude · e^{−rate (t−s)}`; `rate` defaults to `π²`.
    Exponential {
        amplitude: f64,
        #[serde(default = "pi_squared")]
        rate: f64,
        form: Form,
    },
}

fn pi_squared() -> f64 {
    PI * PI
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowConfig {
    #[default]
    Full,
    Interval { lo: f64, hi: f64 },
}

/// A spatial profile, L2-projected onto the element space unless tabulated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `amplitude · sin(mode π x)`
    Sine {
        #[serde(default = "one_usize")]
        mode: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · e^{−(mode π)² time} sin(mode π x)`
    HeatMode {
        #[serde(default = "one_usize")]
        mode: usize,
        #[serde(default = "one")]
        amplitude: f64,
        time: f64,
    },
    /// Coefficients at the interior nodes.
    Samples { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl Profile {
    pub fn coefficients(&self, grid: &SpatialGrid, what: &str) -> Result<Vec<f64>, CliError> {
        let n = grid.n_dof();
        match self {
            Profile::Zero => Ok(vec![0.0; n]),
            Profile::Sine { mode, amplitude } => {
                let (j, a) = (check_mode(*mode, what)?, *amplitude);
                Ok(project_l2(grid, |x| a * (j * PI * x).sin()))
            }
            Profile::HeatMode {
                mode,
                amplitude,
                time,
            } => {
                let j = check_mode(*mode, what)?;
                let a = amplitude * (-(j * PI).powi(2) * time).exp();
                Ok(project_l2(grid, |x| a * (j * PI * x).sin()))
            }
            Profile::Samples { values } => {
                if values.len() != n {
                    return Err(CliError::Config(format!(
                        "{what}: expected {n} interior samples, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::Config(format!("{what}: non-finite sample")));
                }
                Ok(values.clone())
            }
        }
    }
}

fn check_mode(mode: usize, what: &str) -> Result<f64, CliError> {
    if mode == 0 {
        return Err(CliError::Config(format!("{what}: mode index starts at 1")));
    }
    Ok(mode as f64)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSource {
    #[default]
    Zero,
    /// `−t e^{−π²t} sin(πx)`, projected level by level.
    Exact,
    /// A `control.csv` as written by the `control` command.
    File { path: PathBuf },
    /// Uniform on [−1, 1] at every interior node and level, seeded.
    Random {
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Penalty,
    Resolvent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodName,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_cg_max")]
    pub cg_max_iters: usize,
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_max")]
    pub max_fp_iters: usize,
}

fn default_cg_tol() -> f64 {
    1e-12
}
fn default_cg_max() -> usize {
    1000
}
fn default_fp_tol() -> f64 {
    1e-10
}
fn default_fp_max() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Significant decimal digits in every CSV.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_precision() -> usize {
    12
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            precision: default_precision(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Epsilon,
    Delta,
    Galerkin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_parameter")]
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<f64>,
    /// `(modes, slabs)` pairs.
    #[serde(default)]
    pub levels: Vec<(usize, usize)>,
    /// Reference control for the penalty path; its miss is `δ0`.
    #[serde(default = "default_reference")]
    pub reference: ControlSource,
}

fn default_sweep_parameter() -> SweepParameter {
    SweepParameter::Epsilon
}
fn default_reference() -> ControlSource {
    ControlSource::Exact
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: default_sweep_parameter(),
            values: Vec::new(),
            levels: Vec::new(),
            reference: default_reference(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_spatial")]
    pub spatial_cells: Vec<usize>,
    /// `N = c · n_cells²` on the spatial ladder.
    #[serde(default = "one")]
    pub step_constant: f64,
    #[serde(default = "default_temporal_cells")]
    pub temporal_cells: usize,
    #[serde(default = "default_temporal")]
    pub temporal_steps: Vec<usize>,
    #[serde(default = "default_oracle")]
    pub oracle_steps: usize,
}

fn default_spatial() -> Vec<usize> {
    vec![16, 32, 64, 128]
}
fn default_temporal_cells() -> usize {
    256
}
fn default_temporal() -> Vec<usize> {
    vec![10, 20, 40, 80]
}
fn default_oracle() -> usize {
    100_000
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            spatial_cells: default_spatial(),
            step_constant: 1.0,
            temporal_cells: default_temporal_cells(),
            temporal_steps: default_temporal(),
            oracle_steps: default_oracle(),
        }
    }
}

impl RunConfig {
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_EXPERIMENT).expect("shipped configuration parses")
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: RunConfig = match path {
            None => Self::reference(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("reading {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if !(p.final_time > 0.0) || !p.final_time.is_finite() {
            return Err(CliError::Config("final_time must be positive".into()));
        }
        if p.n_cells < 2 {
            return Err(CliError::Config("n_cells must be at least 2".into()));
        }
        if p.n_steps == 0 {
            return Err(CliError::Config("n_steps must be positive".into()));
        }
        if let KernelConfig::Exponential {
            amplitude, rate, ..
        } = p.kernel
        {
            if !amplitude.is_finite() || !(rate >= 0.0) || !rate.is_finite() {
                return Err(CliError::Config(
                    "kernel needs a finite amplitude and a non-negative rate".into(),
                ));
            }
        }
        let s = &self.solver;
        if !(s.cg_tol > 0.0) || !(s.fp_tol > 0.0) || s.cg_max_iters == 0 || s.max_fp_iters == 0 {
            return Err(CliError::Config(
                "tolerances and iteration caps must be positive".into(),
            ));
        }
        for (name, v) in [("epsilon", s.epsilon), ("delta", s.delta)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(CliError::Config(format!("{name} must be positive")));
                }
            }
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            return Err(CliError::Config("precision must lie in 1..=17".into()));
        }
        Ok(())
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        self.solver
            .epsilon
            .ok_or_else(|| CliError::Config("penalty method requires epsilon".into()))
    }

    pub fn delta(&self) -> Result<f64, CliError> {
        self.solver
            .delta
            .ok_or_else(|| CliError::Config("resolvent method requires delta".into()))
    }

    pub fn kernel(&self) -> KernelSpec {
        match self.problem.kernel {
            KernelConfig::None => KernelSpec::none(),
            KernelConfig::Exponential {
                amplitude,
                rate,
                form,
            } => {
                let form = match form {
                    Form::Mass => SpatialForm::Mass,
                    Form::Stiffness => SpatialForm::Stiffness,
                };
                KernelSpec::exponential(amplitude, rate, form)
            }
        }
    }

    pub fn context(&self) -> Result<OperatorContext, CliError> {
        let p = &self.problem;
        let grid = SpatialGrid::new(p.n_cells)?;
        let time = TimeGrid::new(p.final_time, p.n_steps)?;
        let window = match p.window {
            WindowConfig::Full => ControlWindow::full(grid.n_dof()),
            WindowConfig::Interval { lo, hi } => ControlWindow::indicator(&grid, lo, hi)?,
        };
        let y0 = p.initial_state.coefficients(&grid, "initial_state")?;
        let target = p.target.coefficients(&grid, "target")?;
        let solver = SolverContext::new(grid, time)?;
        Ok(OperatorContext::new(solver, self.kernel(), window, y0, target)?)
    }
}
