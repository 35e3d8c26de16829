//! Control solvers: the resolvent fixed-point iteration on state
//! trajectories, and the penalty formulation solved through its linear
//! optimality condition. Parameter sweeps built on both live in [`sweeps`].

mod penalty;
mod resolvent;
pub mod sweeps;

pub use penalty::{penalty_minimize, penalty_minimize_projected, PenaltyConfig};
pub use resolvent::{resolvent_fixed_point, ResolventConfig};
pub use sweeps::{
    delta_sweep, epsilon_path, galerkin_sweep, DeltaRow, EpsilonPath, EpsilonRow, GalerkinRow,
    GalerkinSweep,
};

use crate::error::Result;
use crate::operators::OperatorContext;
use crate::time::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Resolvent,
    Penalty,
}

/// A control, the state it produces, and how well it hits the target.
#[derive(Debug, Clone)]
pub struct ControlResult {
    pub method: Method,
    pub control: Trajectory,
    pub state: Trajectory,
    pub final_state: Vec<f64>,
    /// `‖y(T) − ŷ‖_X`
    pub miss: f64,
    /// `J(u) = ½ ‖u‖²_Y`
    pub cost: f64,
    /// `P(u) = miss²`
    pub penalty: f64,
    /// `J_ε(u) = J(u) + P(u) / (2ε)` for the penalty method.
    pub objective: Option<f64>,
    /// `‖δ (δI + LGG*L*)⁻¹ (ẑ − L B̃ y*)‖_X` for the resolvent method.
    pub approximation_error: Option<f64>,
    /// Outer iterations (fixed-point) or CG iterations (penalty).
    pub iterations: usize,
    /// Successive differences `‖z_{k+1} − z_k‖_Z` or CG relative residuals.
    pub residual_history: Vec<f64>,
    /// Total inner CG iterations spent in resolvent solves.
    pub inner_iterations: usize,
    /// Optimality residual `‖u + ε⁻¹ 𝒦 (E u − ẑ)‖_Y` relative to the right-hand side.
    pub hammerstein_residual: Option<f64>,
}

impl ControlResult {
    /// Ratios `d_{k+1} / d_k` of consecutive entries of the residual history.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residual_history
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect()
    }

    pub fn relative_miss(&self, ctx: &OperatorContext) -> f64 {
        self.miss / ctx.x_norm(ctx.target())
    }
}

/// State, miss and cost of a given control, computed from scratch.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: Trajectory,
    pub final_state: Vec<f64>,
    pub miss: f64,
    pub cost: f64,
    pub penalty: f64,
}

pub fn evaluate_control(ctx: &OperatorContext, u: &Trajectory) -> Result<Evaluation> {
    let state = ctx.state(u)?;
    let final_state = state.final_level().to_vec();
    let diff: Vec<f64> = final_state
        .iter()
        .zip(ctx.target())
        .map(|(a, b)| a - b)
        .collect();
    let miss = ctx.x_norm(&diff);
    let cost = 0.5 * ctx.y_inner(u, u);
    Ok(Evaluation {
        state,
        final_state,
        miss,
        cost,
        penalty: miss * miss,
    })
}
