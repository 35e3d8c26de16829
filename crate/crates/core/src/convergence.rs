//! Observed convergence orders of the forward solver on the reference problem.
//!
//! The spatial ladder refines `h` with `k = c h²` and measures against the
//! projected exact final state. The temporal ladder fixes the mesh and
//! measures against the modal oracle driven by the discrete eigenvalue, which
//! isolates the time error.

use crate::error::{Error, Result};
use crate::experiment::{self, reference_context, projected_exact_control, projected_exact_final};
use crate::spectral_oracle::{oracle_trajectory, ModeProblem, MIN_FINE_STEPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderPoint {
    pub n_cells: usize,
    pub n_steps: usize,
    /// Mesh width `h` on the spatial ladder, step `k` on the temporal one.
    pub size: f64,
    pub error: f64,
    /// `log₂(e_{i−1} / e_i) / log₂(s_{i−1} / s_i)`; `None` on the first point.
    pub order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Ladder {
    pub points: Vec<LadderPoint>,
}

impl Ladder {
    fn from_errors(raw: Vec<(usize, usize, f64, f64)>) -> Self {
        let mut points: Vec<LadderPoint> = Vec::with_capacity(raw.len());
        for (n_cells, n_steps, size, error) in raw {
            let order = points
                .last()
                .map(|p| (p.error / error).ln() / (p.size / size).ln());
            points.push(LadderPoint {
                n_cells,
                n_steps,
                size,
                error,
                order,
            });
        }
        Self { points }
    }

    pub fn pairwise_orders(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.order).collect()
    }

    pub fn min_order(&self) -> Option<f64> {
        self.pairwise_orders().into_iter().reduce(f64::min)
    }

    /// Least-squares slope of `log e` against `log size`.
    pub fn fitted_order(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = self.points.iter().map(|p| p.size.ln()).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.error.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    }
}

/// Relative `M`-norm error of `y(T)` under the projected exact control.
pub fn exact_solution_error(n_cells: usize, n_steps: usize) -> Result<f64> {
    let ctx = reference_context(n_cells, n_steps)?;
    let u = projected_exact_control(&ctx)?;
    let y = ctx.state(&u)?;
    let exact = projected_exact_final(&ctx);
    let diff: Vec<f64> = y.final_level().iter().zip(&exact).map(|(a, b)| a - b).collect();
    Ok(ctx.x_norm(&diff) / ctx.x_norm(&exact))
}

fn check_ladder(values: &[usize]) -> Result<()> {
    if values.len() < 2 || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "ladder needs at least two strictly increasing entries".into(),
        ));
    }
    Ok(())
}

/// Spatial ladder with `N = ⌈c · n_cells²⌉`.
pub fn spatial_ladder(cells: &[usize], c: f64) -> Result<Ladder> {
    check_ladder(cells)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("step constant must be positive".into()));
    }
    let mut raw = Vec::with_capacity(cells.len());
    for &n in cells {
        let n_steps = ((c * (n * n) as f64).ceil() as usize).max(1);
        raw.push((n, n_steps, 1.0 / n as f64, exact_solution_error(n, n_steps)?));
    }
    Ok(Ladder::from_errors(raw))
}

/// Temporal ladder at fixed `n_cells` against the mode-1 oracle.
pub fn temporal_ladder(n_cells: usize, steps: &[usize], n_fine: usize) -> Result<Ladder> {
    check_ladder(steps)?;
    if n_fine < MIN_FINE_STEPS {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least {MIN_FINE_STEPS} steps"
        )));
    }
    let mut raw = Vec::with_capacity(steps.len());
    let mut reference: Option<(f64, Vec<f64>)> = None;
    for &n_steps in steps {
        let ctx = reference_context(n_cells, n_steps)?;
        let (alpha_t, phi) = match &reference {
            Some(r) => r.clone(),
            None => {
                let modes = ctx.modes();
                let alpha0 = modes.coefficients(1, ctx.initial_state())[0];
                let p = ModeProblem::new(modes.eigenvalue(0), 1.0, experiment::DECAY, alpha0)
                    .with_control(move |t| -t * (-experiment::DECAY * t).exp() * alpha0);
                let traj = oracle_trajectory(&p, experiment::FINAL_TIME, n_fine)?;
                let r = (traj.final_alpha(), modes.vector(0).to_vec());
                reference = Some(r.clone());
                r
            }
        };
        let u = projected_exact_control(&ctx)?;
        let y = ctx.state(&u)?;
        let exact: Vec<f64> = phi.iter().map(|v| v * alpha_t).collect();
        let diff: Vec<f64> = y.final_level().iter().zip(&exact).map(|(a, b)| a - b).collect();
        let err = ctx.x_norm(&diff) / ctx.x_norm(&exact);
        raw.push((n_cells, n_steps, experiment::FINAL_TIME / n_steps as f64, err));
    }
    Ok(Ladder::from_errors(raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_synthetic_ladder() {
        let raw = (0..4)
            .map(|i| {
                let h = 0.5f64.powi(i);
                (0, 0, h, 3.0 * h * h)
            })
            .collect();
        let l = Ladder::from_errors(raw);
        for o in l.pairwise_orders() {
            assert!((o - 2.0).abs() < 1e-12);
        }
        assert!((l.fitted_order().unwrap() - 2.0).abs() < 1e-12);
        assert!(l.points[0].order.is_none());
    }

    #[test]
    fn small_spatial_ladder_is_second_order() {
        let l = spatial_ladder(&[8, 16, 32], 1.0).unwrap();
        assert!(l.min_order().unwrap() > 1.8, "{:?}", l.points);
    }

    #[test]
    fn rejects_bad_ladders() {
        assert!(spatial_ladder(&[16], 1.0).is_err());
        assert!(spatial_ladder(&[16, 8], 1.0).is_err());
        assert!(temporal_ladder(16, &[10, 20], 100).is_err());
    }
}
