//! High-accuracy modal reference for separable exponential kernels.
//!
//! On a single eigenmode with eigenvalue `λ` and kernel `w e^{−μ(t−s)}`, the
//! integro-differential equation becomes
//!
//! ```text
//! α' = −λ α + w m + u(t),   m' = −μ m + α,   m(0) = 0,
//! ```
//!
//! where `m(t) = ∫₀ᵗ e^{−μ(t−s)} α(s) ds`. The pair is integrated with the
//! classical fourth-order Runge–Kutta method on a very fine uniform grid.

use crate::error::{Error, Result};

pub const MIN_FINE_STEPS: usize = 10_000;

/// One scalar mode of the memory equation.
pub struct ModeProblem {
    pub eigenvalue: f64,
    /// Coefficient `w` of the memory variable; `amplitude` for the mass form,
    /// `amplitude · λ` for the stiffness form, zero without memory.
    pub memory_weight: f64,
    pub decay_rate: f64,
    pub initial: f64,
    pub control: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ModeProblem {
    pub fn new(eigenvalue: f64, memory_weight: f64, decay_rate: f64, initial: f64) -> Self {
        Self {
            eigenvalue,
            memory_weight,
            decay_rate,
            initial,
            control: Box::new(|_| 0.0),
        }
    }

    pub fn with_control<F>(mut self, control: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.control = Box::new(control);
        self
    }

    fn rhs(&self, t: f64, alpha: f64, mem: f64) -> (f64, f64) {
        (
            -self.eigenvalue * alpha + self.memory_weight * mem + (self.control)(t),
            -self.decay_rate * mem + alpha,
        )
    }
}

/// Mode amplitude `α` and memory variable `m` at `t_i = i T / n_fine`.
#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    pub final_time: f64,
    pub alpha: Vec<f64>,
    pub memory: Vec<f64>,
}

impl OracleTrajectory {
    pub fn n_fine(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn final_alpha(&self) -> f64 {
        *self.alpha.last().expect("non-empty trajectory")
    }

    /// Amplitudes at the `n_coarse + 1` points of a coarser uniform grid.
    pub fn sample(&self, n_coarse: usize) -> Result<Vec<f64>> {
        let n = self.n_fine();
        if n_coarse == 0 || !n.is_multiple_of(n_coarse) {
            return Err(Error::NotDivisible {
                n_steps: n,
                slabs: n_coarse,
            });
        }
        let stride = n / n_coarse;
        Ok(self.alpha.iter().step_by(stride).copied().collect())
    }
}

pub fn oracle_trajectory(p: &ModeProblem, final_time: f64, n_fine: usize) -> Result<OracleTrajectory> {
    if n_fine < MIN_FINE_STEPS {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least {MIN_FINE_STEPS} steps, got {n_fine}"
        )));
    }
    if !(final_time > 0.0) {
        return Err(Error::InvalidParameter("final time must be positive".into()));
    }
    if !(p.eigenvalue > 0.0) || p.decay_rate < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need eigenvalue > 0 and decay rate ≥ 0, got ({}, {})",
            p.eigenvalue, p.decay_rate
        )));
    }
    let h = final_time / n_fine as f64;
    let mut alpha = Vec::with_capacity(n_fine + 1);
    let mut memory = Vec::with_capacity(n_fine + 1);
    let (mut a, mut m) = (p.initial, 0.0);
    alpha.push(a);
    memory.push(m);
    for i in 0..n_fine {
        let t = i as f64 * h;
        let (k1a, k1m) = p.rhs(t, a, m);
        let (k2a, k2m) = p.rhs(t + 0.5 * h, a + 0.5 * h * k1a, m + 0.5 * h * k1m);
        let (k3a, k3m) = p.rhs(t + 0.5 * h, a + 0.5 * h * k2a, m + 0.5 * h * k2m);
        let (k4a, k4m) = p.rhs(t + h, a + h * k3a, m + h * k3m);
        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        alpha.push(a);
        memory.push(m);
    }
    Ok(OracleTrajectory {
        final_time,
        alpha,
        memory,
    })
}
