use super::{evaluate_control, ControlResult, Method};
use crate::error::{Error, Result};
use crate::operators::OperatorContext;
use crate::time::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventConfig {
    pub delta: f64,
    pub fp_tol: f64,
    pub max_fp_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl ResolventConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            fp_tol: 1e-10,
            max_fp_iters: 200,
            cg_tol: 1e-12,
            cg_max_iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "δ must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !(self.fp_tol > 0.0) || !(self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_fp_iters == 0 || self.cg_max_iters == 0 {
            return Err(Error::InvalidParameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

struct Step {
    control: Trajectory,
    next: Trajectory,
    cg_iterations: usize,
}

/// `u = G* L* (δI + LGG*L*)⁻¹ (ẑ − L B̃ z)`, `R_δ z = W u`.
fn apply_map(ctx: &OperatorContext, cfg: &ResolventConfig, z_hat: &[f64], z: &Trajectory) -> Result<Step> {
    let w = ctx.memory_response(z)?;
    let r: Vec<f64> = z_hat.iter().zip(&w).map(|(a, b)| a - b).collect();
    let g = ctx.solve_resolvent(cfg.delta, &r, cfg.cg_tol, cfg.cg_max_iters)?;
    let control = ctx.control_from_final(&g.solution)?;
    let next = ctx.state(&control)?;
    Ok(Step {
        control,
        next,
        cg_iterations: g.iterations,
    })
}

/// Fixed-point iteration `z ← R_δ z` on state trajectories, started from the
/// uncontrolled trajectory.
///
/// Stops once `‖z_{k+1} − z_k‖_Z ≤ fp_tol · max(1, ‖z_k‖_Z)`. Without a memory
/// term the map is constant and one application suffices.
pub fn resolvent_fixed_point(ctx: &OperatorContext, cfg: &ResolventConfig) -> Result<ControlResult> {
    cfg.validate()?;
    let z_hat = ctx.z_hat();
    let mut z = ctx.state(&ctx.zero_control())?;
    let mut history = Vec::new();
    let mut inner = 0;
    let mut iterations = 0;
    let control;

    loop {
        iterations += 1;
        let step = apply_map(ctx, cfg, &z_hat, &z)?;
        inner += step.cg_iterations;
        let mut diff = step.next.clone();
        diff.axpy(-1.0, &z);
        let d = ctx.z_norm(&diff);
        history.push(d);
        let scale = ctx.z_norm(&z).max(1.0);
        z = step.next;
        if ctx.kernel().is_none() || d <= cfg.fp_tol * scale {
            control = step.control;
            break;
        }
        if iterations >= cfg.max_fp_iters {
            return Err(Error::NotConverged {
                solver: "resolvent fixed point",
                iterations,
                residual: d,
                history,
            });
        }
    }

    let eval = evaluate_control(ctx, &control)?;
    let w = ctx.memory_response(&eval.state)?;
    let r: Vec<f64> = z_hat.iter().zip(&w).map(|(a, b)| a - b).collect();
    let g = ctx.solve_resolvent(cfg.delta, &r, cfg.cg_tol, cfg.cg_max_iters)?;
    inner += g.iterations;
    let approximation_error = cfg.delta * ctx.x_norm(&g.solution);

    Ok(ControlResult {
        method: Method::Resolvent,
        control,
        state: eval.state,
        final_state: eval.final_state,
        miss: eval.miss,
        cost: eval.cost,
        penalty: eval.penalty,
        objective: None,
        approximation_error: Some(approximation_error),
        iterations,
        residual_history: history,
        inner_iterations: inner,
        hammerstein_residual: None,
    })
}
