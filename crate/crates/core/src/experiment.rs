//! The reference problem: heat equation on (0, 1) with memory kernel
//! `e^{−π²(t−s)}` acting through the identity, `y0 = sin(πx)`, `T = 1`.
//!
//! The control `u(t, x) = −t e^{−π²t} sin(πx)` makes `y(t, x) = e^{−π²t} sin(πx)`
//! an exact solution, so the target is `ŷ = e^{−π²} sin(πx)`.

use std::f64::consts::PI;

use crate::discretization::{project_l2, SpatialGrid};
use crate::error::Result;
use crate::operators::OperatorContext;
use crate::pide_solver::{ControlWindow, KernelSpec, SolverContext, SpatialForm};
use crate::time::{TimeGrid, Trajectory};

pub const FINAL_TIME: f64 = 1.0;
pub const DECAY: f64 = PI * PI;

pub fn initial_profile(x: f64) -> f64 {
    (PI * x).sin()
}

pub fn exact_state(t: f64, x: f64) -> f64 {
    (-DECAY * t).exp() * (PI * x).sin()
}

pub fn exact_control(t: f64, x: f64) -> f64 {
    -t * (-DECAY * t).exp() * (PI * x).sin()
}

pub fn reference_kernel() -> KernelSpec {
    KernelSpec::exponential(1.0, DECAY, SpatialForm::Mass)
}

pub fn reference_solver(n_cells: usize, n_steps: usize) -> Result<SolverContext> {
    SolverContext::new(SpatialGrid::new(n_cells)?, TimeGrid::new(FINAL_TIME, n_steps)?)
}

/// Operator context of the reference problem with a full control window.
pub fn reference_context(n_cells: usize, n_steps: usize) -> Result<OperatorContext> {
    let solver = reference_solver(n_cells, n_steps)?;
    let y0 = project_l2(solver.grid(), initial_profile);
    let target: Vec<f64> = y0.iter().map(|v| v * (-DECAY * FINAL_TIME).exp()).collect();
    let window = ControlWindow::full(solver.n_dof());
    OperatorContext::new(solver, reference_kernel(), window, y0, target)
}

/// `P_h` of the exact control at every time level.
pub fn projected_exact_control(ctx: &OperatorContext) -> Result<Trajectory> {
    let grid = ctx.solver().grid();
    let profile = project_l2(grid, initial_profile);
    Trajectory::from_fn(ctx.solver().time(), ctx.n_dof(), |_, t| {
        let a = -t * (-DECAY * t).exp();
        profile.iter().map(|p| a * p).collect()
    })
}

/// `P_h` of the exact final state.
pub fn projected_exact_final(ctx: &OperatorContext) -> Vec<f64> {
    project_l2(ctx.solver().grid(), |x| exact_state(FINAL_TIME, x))
}
