use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pide_control::control::{
    delta_sweep, epsilon_path, evaluate_control, galerkin_sweep, penalty_minimize,
    resolvent_fixed_point, ControlResult, PenaltyConfig, ResolventConfig,
};
use pide_control::convergence::{spatial_ladder, temporal_ladder, Ladder};
use pide_control::discretization::{project_l2, GalerkinLevel};
use pide_control::operators::OperatorContext;
use pide_control::time::Trajectory;

use crate::config::{ControlSource, MethodName, RunConfig, SweepParameter};
use crate::error::CliError;
use crate::output::{read_trajectory, trajectory_table, write_atomic, Fmt, Table};

fn fmt(cfg: &RunConfig) -> Fmt {
    Fmt::new(cfg.output.precision)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "violated"
    }
}

fn opt(f: Fmt, v: Option<f64>) -> String {
    v.map(|x| f.num(x)).unwrap_or_default()
}

pub fn build_control(
    ctx: &OperatorContext,
    source: &ControlSource,
    base: Option<&Path>,
) -> Result<Trajectory, CliError> {
    let time = ctx.solver().time();
    let grid = ctx.solver().grid();
    match source {
        ControlSource::Zero => Ok(ctx.zero_control()),
        ControlSource::Exact => {
            let profile = project_l2(grid, |x| (PI * x).sin());
            Ok(Trajectory::from_fn(time, ctx.n_dof(), |_, t| {
                let a = -t * (-PI * PI * t).exp();
                profile.iter().map(|p| a * p).collect()
            })?)
        }
        ControlSource::Random { seed } => {
            let mut rng = StdRng::seed_from_u64(*seed);
            let mut u = ctx.zero_control();
            for n in 1..=ctx.n_steps() {
                u.level_mut(n)
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-1.0..1.0));
            }
            Ok(u)
        }
        ControlSource::File { path } => {
            let path = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            read_trajectory(&text, time, grid)
        }
    }
}

fn final_state_table(f: Fmt, ctx: &OperatorContext, y_t: &[f64]) -> String {
    let nodes = ctx.solver().grid().all_nodes();
    let last = nodes.len() - 1;
    let mut t = Table::new(&["x", "y_T", "y_hat"]);
    for (i, &x) in nodes.iter().enumerate() {
        let (y, h) = if i == 0 || i == last {
            (0.0, 0.0)
        } else {
            (y_t[i - 1], ctx.target()[i - 1])
        };
        t.row(&[f.num(x), f.num(y), f.num(h)]);
    }
    t.into_string()
}

/// Solves forward under the configured control; writes `state.csv` and `final_state.csv`.
pub fn cmd_forward(cfg: &RunConfig, out: &Path, base: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let ctx = cfg.context()?;
    let f = fmt(cfg);
    let u = build_control(&ctx, &cfg.control, base)?;
    let y = ctx.state(&u)?;
    let time = ctx.solver().time();
    let grid = ctx.solver().grid();
    Ok(vec![
        write_atomic(out, "state.csv", &trajectory_table(f, time, grid, "y", &y))?,
        write_atomic(out, "final_state.csv", &final_state_table(f, &ctx, y.final_level()))?,
    ])
}

pub fn run_solver(cfg: &RunConfig, ctx: &OperatorContext) -> Result<ControlResult, CliError> {
    let s = &cfg.solver;
    match s.method {
        MethodName::Penalty => {
            let p = PenaltyConfig {
                epsilon: cfg.epsilon()?,
                cg_tol: s.cg_tol,
                cg_max_iters: s.cg_max_iters,
            };
            Ok(penalty_minimize(ctx, &p)?)
        }
        MethodName::Resolvent => {
            let r = ResolventConfig {
                delta: cfg.delta()?,
                fp_tol: s.fp_tol,
                max_fp_iters: s.max_fp_iters,
                cg_tol: s.cg_tol,
                cg_max_iters: s.cg_max_iters,
            };
            Ok(resolvent_fixed_point(ctx, &r)?)
        }
    }
}

/// Runs the configured solver; writes `control.csv`, `final_state.csv`,
/// `surface.csv` and `summary.csv`.
///
/// The control is rounded to the output precision before the reported state
/// is computed, so feeding `control.csv` back to `forward` reproduces
/// `surface.csv` exactly.
pub fn cmd_control(cfg: &RunConfig, out: &Path) -> Result<(Vec<PathBuf>, ControlResult), CliError> {
    let ctx = cfg.context()?;
    // method parameters are checked before any work is done
    match cfg.solver.method {
        MethodName::Penalty => cfg.epsilon().map(drop)?,
        MethodName::Resolvent => cfg.delta().map(drop)?,
    }
    let f = fmt(cfg);
    let res = run_solver(cfg, &ctx)?;
    let mut u = res.control.clone();
    u.as_mut_slice().iter_mut().for_each(|v| *v = f.quantize(*v));
    let eval = evaluate_control(&ctx, &u)?;

    let (method, parameter) = match cfg.solver.method {
        MethodName::Penalty => ("penalty", cfg.epsilon()?),
        MethodName::Resolvent => ("resolvent", cfg.delta()?),
    };
    let objective = res.objective.map(|_| eval.cost + eval.penalty / (2.0 * parameter));
    let mut summary = Table::new(&[
        "method",
        "parameter",
        "miss",
        "relative_miss",
        "cost",
        "penalty",
        "objective",
        "approximation_error",
        "iterations",
        "inner_iterations",
        "hammerstein_residual",
    ]);
    summary.row(&[
        method.to_string(),
        f.num(parameter),
        f.num(eval.miss),
        f.num(eval.miss / ctx.x_norm(ctx.target())),
        f.num(eval.cost),
        f.num(eval.penalty),
        opt(f, objective),
        opt(f, res.approximation_error),
        res.iterations.to_string(),
        res.inner_iterations.to_string(),
        opt(f, res.hammerstein_residual),
    ]);

    let time = ctx.solver().time();
    let grid = ctx.solver().grid();
    let files = vec![
        write_atomic(out, "control.csv", &trajectory_table(f, time, grid, "u", &u))?,
        write_atomic(out, "final_state.csv", &final_state_table(f, &ctx, &eval.final_state))?,
        write_atomic(out, "surface.csv", &trajectory_table(f, time, grid, "y", &eval.state))?,
        write_atomic(out, "summary.csv", &summary.into_string())?,
    ];
    Ok((files, res))
}

/// Sweep outcome: the written table and whether every verdict is `ok`.
pub struct SweepOutcome {
    pub path: PathBuf,
    pub rows: usize,
    pub all_ok: bool,
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    out: &Path,
    parameter: SweepParameter,
    base: Option<&Path>,
) -> Result<SweepOutcome, CliError> {
    let ctx = cfg.context()?;
    let f = fmt(cfg);
    let s = &cfg.solver;
    let values = &cfg.sweep.values;
    let (name, table, rows, all_ok) = match parameter {
        SweepParameter::Epsilon => {
            let reference = build_control(&ctx, &cfg.sweep.reference, base)?;
            let template = PenaltyConfig {
                epsilon: 1.0,
                cg_tol: s.cg_tol,
                cg_max_iters: s.cg_max_iters,
            };
            let path = epsilon_path(&ctx, values, &reference, &template)?;
            let mut t = Table::new(&[
                "epsilon",
                "cost",
                "penalty",
                "objective",
                "miss",
                "bound",
                "iterations",
                "objective_increasing",
                "penalty_decreasing",
                "cost_increasing",
                "bounded",
                "verdict",
            ]);
            for r in &path.rows {
                t.row(&[
                    f.num(r.epsilon),
                    f.num(r.cost),
                    f.num(r.penalty),
                    f.num(r.objective),
                    f.num(r.miss),
                    f.num(r.bound),
                    r.iterations.to_string(),
                    verdict(r.objective_increasing).into(),
                    verdict(r.penalty_decreasing).into(),
                    verdict(r.cost_increasing).into(),
                    verdict(r.bounded).into(),
                    verdict(r.ok()).into(),
                ]);
            }
            ("sweep_epsilon.csv", t, path.rows.len(), path.chains_hold())
        }
        SweepParameter::Delta => {
            let template = ResolventConfig {
                delta: 1.0,
                fp_tol: s.fp_tol,
                max_fp_iters: s.max_fp_iters,
                cg_tol: s.cg_tol,
                cg_max_iters: s.cg_max_iters,
            };
            let rows = delta_sweep(&ctx, values, &template)?;
            let mut t = Table::new(&[
                "delta",
                "miss",
                "relative_miss",
                "approximation_error",
                "cost",
                "iterations",
                "inner_iterations",
                "max_ratio",
                "miss_decreasing",
                "error_decreasing",
                "verdict",
            ]);
            for r in &rows {
                t.row(&[
                    f.num(r.delta),
                    f.num(r.miss),
                    f.num(r.relative_miss),
                    f.num(r.approximation_error),
                    f.num(r.cost),
                    r.iterations.to_string(),
                    r.inner_iterations.to_string(),
                    f.num(r.max_ratio),
                    verdict(r.miss_decreasing).into(),
                    verdict(r.error_decreasing).into(),
                    verdict(r.ok()).into(),
                ]);
            }
            let ok = rows.iter().all(|r| r.ok());
            ("sweep_delta.csv", t, rows.len(), ok)
        }
        SweepParameter::Galerkin => {
            let levels: Vec<GalerkinLevel> = cfg
                .sweep
                .levels
                .iter()
                .map(|&(m, k)| GalerkinLevel::new(m, k))
                .collect();
            let p = PenaltyConfig {
                epsilon: cfg.epsilon()?,
                cg_tol: s.cg_tol,
                cg_max_iters: s.cg_max_iters,
            };
            let sweep = galerkin_sweep(&ctx, &levels, &p)?;
            let mut t = Table::new(&[
                "modes",
                "slabs",
                "distance",
                "cost",
                "miss",
                "iterations",
                "verdict",
            ]);
            for r in &sweep.rows {
                t.row(&[
                    r.level.modes.to_string(),
                    r.level.slabs.to_string(),
                    f.num(r.distance),
                    f.num(r.cost),
                    f.num(r.miss),
                    r.iterations.to_string(),
                    verdict(r.distance_decreasing).into(),
                ]);
            }
            ("sweep_galerkin.csv", t, sweep.rows.len(), sweep.monotone())
        }
    };
    let path = write_atomic(out, name, &table.into_string())?;
    Ok(SweepOutcome { path, rows, all_ok })
}

fn ladder_rows(f: Fmt, t: &mut Table, name: &str, ladder: &Ladder) {
    for p in &ladder.points {
        t.row(&[
            name.to_string(),
            p.n_cells.to_string(),
            p.n_steps.to_string(),
            f.num(p.size),
            f.num(p.error),
            opt(f, p.order),
        ]);
    }
}

pub struct ConvergenceOutcome {
    pub path: PathBuf,
    pub spatial: Ladder,
    pub temporal: Ladder,
}

/// Spatial and temporal ladders on the reference problem; writes `convergence.csv`.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<ConvergenceOutcome, CliError> {
    let c = &cfg.convergence;
    let f = fmt(cfg);
    let spatial = spatial_ladder(&c.spatial_cells, c.step_constant)?;
    let temporal = temporal_ladder(c.temporal_cells, &c.temporal_steps, c.oracle_steps)?;
    let mut t = Table::new(&["ladder", "n_cells", "n_steps", "size", "error", "order"]);
    ladder_rows(f, &mut t, "spatial", &spatial);
    ladder_rows(f, &mut t, "temporal", &temporal);
    let path = write_atomic(out, "convergence.csv", &t.into_string())?;
    Ok(ConvergenceOutcome {
        path,
        spatial,
        temporal,
    })
}
