use super::{evaluate_control, ControlResult, Method};
use crate::error::{Error, Result};
use crate::linalg::conjugate_gradient;
use crate::operators::OperatorContext;
use crate::time::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub epsilon: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl PenaltyConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            cg_tol: 1e-12,
            cg_max_iters: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ε must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iters == 0 {
            return Err(Error::InvalidParameter("invalid CG settings".into()));
        }
        Ok(())
    }
}

/// Minimizes `J_ε(u) = ½‖u‖²_Y + ‖E u − ẑ‖²_X / (2ε)`.
///
/// `E` is affine, so the optimality condition `u + ε⁻¹ 𝒦 (E u − ẑ) = 0` is the
/// linear system `(I + ε⁻¹ 𝒦 E_lin) u = ε⁻¹ 𝒦 (ẑ − E(0))`, symmetric positive
/// definite in `Y` and solved by CG. Every matvec is one forward solve plus
/// one reverse sweep.
pub fn penalty_minimize(ctx: &OperatorContext, cfg: &PenaltyConfig) -> Result<ControlResult> {
    penalty_minimize_projected(ctx, cfg, |u: &Trajectory| u.clone())
}

/// [`penalty_minimize`] restricted to the range of an orthogonal projector
/// `Π` on `Y`: CG runs on `Π (I + ε⁻¹ 𝒦 E_lin) Π` with right-hand side
/// `Π ε⁻¹ 𝒦 (ẑ − E(0))`, so every iterate stays in the subspace.
pub fn penalty_minimize_projected<P>(
    ctx: &OperatorContext,
    cfg: &PenaltyConfig,
    project: P,
) -> Result<ControlResult>
where
    P: Fn(&Trajectory) -> Trajectory,
{
    cfg.validate()?;
    let n_steps = ctx.n_steps();
    let n_dof = ctx.n_dof();
    let inv_eps = 1.0 / cfg.epsilon;

    let z_hat = ctx.z_hat();
    let offset = ctx.offset()?;
    let defect: Vec<f64> = z_hat.iter().zip(&offset).map(|(a, b)| a - b).collect();
    let rhs = project(&ctx.apply_e_adjoint(&defect)?.scaled(inv_eps));

    let normal = |u: &Trajectory| -> Result<Trajectory> {
        let pu = project(u);
        let e = ctx.apply_e_lin(&pu)?;
        let mut out = ctx.apply_e_adjoint(&e)?.scaled(inv_eps);
        out.axpy(1.0, &pu);
        Ok(project(&out))
    };

    let outcome = conjugate_gradient(
        |flat| {
            let u = Trajectory::from_flat(n_steps, n_dof, flat.to_vec())?;
            Ok(normal(&u)?.into_flat())
        },
        |a, b| ctx.y_inner_flat(a, b),
        rhs.as_slice(),
        cfg.cg_tol,
        cfg.cg_max_iters,
        "penalty CG",
    )?;
    let control = Trajectory::from_flat(n_steps, n_dof, outcome.solution)?;

    // true residual of the optimality condition, recomputed from the control
    let mut residual = normal(&control)?;
    residual.axpy(-1.0, &rhs);
    let rhs_norm = ctx.y_norm(&rhs);
    let hammerstein = if rhs_norm > 0.0 {
        ctx.y_norm(&residual) / rhs_norm
    } else {
        ctx.y_norm(&residual)
    };

    let eval = evaluate_control(ctx, &control)?;
    Ok(ControlResult {
        method: Method::Penalty,
        objective: Some(eval.cost + eval.penalty * inv_eps * 0.5),
        control,
        state: eval.state,
        final_state: eval.final_state,
        miss: eval.miss,
        cost: eval.cost,
        penalty: eval.penalty,
        approximation_error: None,
        iterations: outcome.iterations,
        residual_history: outcome.history,
        inner_iterations: 0,
        hammerstein_residual: Some(hammerstein),
    })
}
