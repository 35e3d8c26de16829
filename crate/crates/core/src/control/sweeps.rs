//! Parameter sweeps over the two control solvers with monotonicity verdicts.

use super::{
    evaluate_control, penalty_minimize, penalty_minimize_projected, resolvent_fixed_point,
    PenaltyConfig, ResolventConfig,
};
use crate::discretization::{project_time_slabs, project_trajectory_modes, GalerkinLevel};
use crate::error::{Error, Result};
use crate::operators::OperatorContext;
use crate::time::Trajectory;

/// Relative slack used by every monotonicity comparison.
pub const MONOTONE_SLACK: f64 = 1e-10;

fn slack(v: f64) -> f64 {
    MONOTONE_SLACK * (1.0 + v.abs())
}

/// `a ≤ b` up to the slack of `b`.
fn le(a: f64, b: f64) -> bool {
    a <= b + slack(b)
}

#[derive(Debug, Clone)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub cost: f64,
    pub penalty: f64,
    pub objective: f64,
    pub miss: f64,
    /// `J(u_ref) + δ0² / (2ε)`
    pub bound: f64,
    pub iterations: usize,
    /// `J_ε(u_ε) ≤ J_ε′(u_ε′)` against the previous row; `true` on the first row.
    pub objective_increasing: bool,
    /// `P(u_ε) ≥ P(u_ε′)` against the previous row.
    pub penalty_decreasing: bool,
    /// `J(u_ε) ≤ J(u_ε′)` against the previous row.
    pub cost_increasing: bool,
    /// `J(u_ε) ≤ J_ε(u_ε) ≤ bound`.
    pub bounded: bool,
}

impl EpsilonRow {
    pub fn ok(&self) -> bool {
        self.objective_increasing && self.penalty_decreasing && self.cost_increasing && self.bounded
    }
}

#[derive(Debug, Clone)]
pub struct EpsilonPath {
    pub reference_cost: f64,
    pub reference_miss: f64,
    pub rows: Vec<EpsilonRow>,
}

impl EpsilonPath {
    pub fn chains_hold(&self) -> bool {
        self.rows.iter().all(EpsilonRow::ok)
    }

    /// Last penalty at most a tenth of the first.
    pub fn penalty_decays(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.penalty <= a.penalty / 10.0,
            _ => false,
        }
    }
}

fn check_strictly_decreasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("empty {name} list")));
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} values must be positive")));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} list must be strictly decreasing")));
    }
    Ok(())
}

/// Penalty solves along a strictly decreasing list of `ε`, compared against a
/// reference control whose miss plays the role of `δ0`.
pub fn epsilon_path(
    ctx: &OperatorContext,
    epsilons: &[f64],
    reference: &Trajectory,
    template: &PenaltyConfig,
) -> Result<EpsilonPath> {
    check_strictly_decreasing("ε", epsilons)?;
    let r = evaluate_control(ctx, reference)?;
    let mut rows: Vec<EpsilonRow> = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let cfg = PenaltyConfig { epsilon, ..*template };
        let res = penalty_minimize(ctx, &cfg)?;
        let objective = res.objective.expect("penalty result carries J_ε");
        let bound = r.cost + r.penalty / (2.0 * epsilon);
        let (oi, pd, ci) = match rows.last() {
            Some(prev) => (
                le(prev.objective, objective),
                le(res.penalty, prev.penalty),
                le(prev.cost, res.cost),
            ),
            None => (true, true, true),
        };
        rows.push(EpsilonRow {
            epsilon,
            cost: res.cost,
            penalty: res.penalty,
            objective,
            miss: res.miss,
            bound,
            iterations: res.iterations,
            objective_increasing: oi,
            penalty_decreasing: pd,
            cost_increasing: ci,
            bounded: le(res.cost, objective) && le(objective, bound),
        });
    }
    Ok(EpsilonPath {
        reference_cost: r.cost,
        reference_miss: r.miss,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct DeltaRow {
    pub delta: f64,
    pub miss: f64,
    pub relative_miss: f64,
    pub approximation_error: f64,
    pub cost: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// Largest `‖z_{k+1} − z_k‖ / ‖z_k − z_{k−1}‖`; zero with a single iterate.
    pub max_ratio: f64,
    /// Miss strictly below the previous row; `true` on the first row.
    pub miss_decreasing: bool,
    /// `e_δ` not above the previous row.
    pub error_decreasing: bool,
}

impl DeltaRow {
    pub fn ok(&self) -> bool {
        self.miss_decreasing && self.error_decreasing && self.max_ratio < 1.0
    }
}

/// Resolvent fixed-point solves along a strictly decreasing list of `δ`.
pub fn delta_sweep(
    ctx: &OperatorContext,
    deltas: &[f64],
    template: &ResolventConfig,
) -> Result<Vec<DeltaRow>> {
    check_strictly_decreasing("δ", deltas)?;
    let mut rows: Vec<DeltaRow> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let cfg = ResolventConfig { delta, ..*template };
        let res = resolvent_fixed_point(ctx, &cfg)?;
        let e = res.approximation_error.expect("resolvent result carries e_δ");
        let max_ratio = res.contraction_ratios().into_iter().fold(0.0, f64::max);
        let (md, ed) = match rows.last() {
            Some(prev) => (res.miss < prev.miss, le(e, prev.approximation_error)),
            None => (true, true),
        };
        rows.push(DeltaRow {
            delta,
            relative_miss: res.relative_miss(ctx),
            miss: res.miss,
            approximation_error: e,
            cost: res.cost,
            iterations: res.iterations,
            inner_iterations: res.inner_iterations,
            max_ratio,
            miss_decreasing: md,
            error_decreasing: ed,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct GalerkinRow {
    pub level: GalerkinLevel,
    /// `‖u_m^k − u_full‖_Y`
    pub distance: f64,
    pub cost: f64,
    pub miss: f64,
    pub iterations: usize,
    /// Distance not above the previous row; `true` on the first row.
    pub distance_decreasing: bool,
}

#[derive(Debug, Clone)]
pub struct GalerkinSweep {
    pub full: super::ControlResult,
    pub rows: Vec<GalerkinRow>,
}

impl GalerkinSweep {
    pub fn monotone(&self) -> bool {
        self.rows.iter().all(|r| r.distance_decreasing)
    }
}

/// `Π = P_m ∘ Q_k`: slab averaging in time followed by mode truncation.
pub fn galerkin_projector<'a>(
    ctx: &'a OperatorContext,
    level: GalerkinLevel,
) -> impl Fn(&Trajectory) -> Trajectory + 'a {
    move |u: &Trajectory| {
        let q = project_time_slabs(&level, u).expect("level validated against the time grid");
        project_trajectory_modes(ctx.modes(), level.modes, &q)
    }
}

/// Penalty solves restricted to each `Y_m^k`, compared with the unrestricted
/// minimizer. Levels must be componentwise nondecreasing.
pub fn galerkin_sweep(
    ctx: &OperatorContext,
    levels: &[GalerkinLevel],
    cfg: &PenaltyConfig,
) -> Result<GalerkinSweep> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("empty level list".into()));
    }
    for l in levels {
        l.validate(ctx.n_dof(), ctx.n_steps())?;
    }
    if levels
        .windows(2)
        .any(|w| w[1].modes < w[0].modes || w[1].slabs < w[0].slabs)
    {
        return Err(Error::InvalidParameter(
            "levels must be nondecreasing in modes and slabs".into(),
        ));
    }
    let full = penalty_minimize(ctx, cfg)?;
    let mut rows: Vec<GalerkinRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let res = penalty_minimize_projected(ctx, cfg, galerkin_projector(ctx, level))?;
        let mut d = res.control.clone();
        d.axpy(-1.0, &full.control);
        let distance = ctx.y_norm(&d);
        let dd = rows.last().is_none_or(|p| le(distance, p.distance));
        rows.push(GalerkinRow {
            level,
            distance,
            cost: res.cost,
            miss: res.miss,
            iterations: res.iterations,
            distance_decreasing: dd,
        });
    }
    Ok(GalerkinSweep { full, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{reference_context, projected_exact_control};

    #[test]
    fn single_epsilon_checks_bound_only() {
        let ctx = reference_context(16, 16).unwrap();
        let u_ref = projected_exact_control(&ctx).unwrap();
        let path = epsilon_path(&ctx, &[1e-3], &u_ref, &PenaltyConfig::new(1.0)).unwrap();
        assert_eq!(path.rows.len(), 1);
        assert!(path.chains_hold());
    }

    #[test]
    fn epsilon_list_must_decrease() {
        let ctx = reference_context(8, 8).unwrap();
        let u = ctx.zero_control();
        let cfg = PenaltyConfig::new(1.0);
        assert!(epsilon_path(&ctx, &[1e-2, 1e-1], &u, &cfg).is_err());
        assert!(epsilon_path(&ctx, &[], &u, &cfg).is_err());
        assert!(delta_sweep(&ctx, &[0.1, 0.1], &ResolventConfig::new(1.0)).is_err());
    }

    #[test]
    fn short_epsilon_path_is_monotone() {
        let ctx = reference_context(16, 16).unwrap();
        let u_ref = projected_exact_control(&ctx).unwrap();
        let path = epsilon_path(&ctx, &[1e-1, 1e-2, 1e-3], &u_ref, &PenaltyConfig::new(1.0)).unwrap();
        assert!(path.chains_hold(), "{:#?}", path.rows);
    }

    #[test]
    fn full_level_matches_unprojected() {
        let ctx = reference_context(8, 8).unwrap();
        let sweep = galerkin_sweep(&ctx, &[GalerkinLevel::new(7, 8)], &PenaltyConfig::new(1e-3)).unwrap();
        assert!(sweep.rows[0].distance <= 1e-9 * ctx.y_norm(&sweep.full.control));
    }

    #[test]
    fn level_ordering_enforced() {
        let ctx = reference_context(8, 8).unwrap();
        let cfg = PenaltyConfig::new(1e-3);
        let bad = [GalerkinLevel::new(4, 8), GalerkinLevel::new(2, 8)];
        assert!(galerkin_sweep(&ctx, &bad, &cfg).is_err());
        assert!(matches!(
            galerkin_sweep(&ctx, &[GalerkinLevel::new(2, 3)], &cfg),
            Err(Error::NotDivisible { .. })
        ));
    }
}
