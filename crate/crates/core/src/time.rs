//! Uniform time grids and trajectories of coefficient vectors.

use crate::error::{check_len, Error, Result};

/// `t_n = n k` for `n = 0..=N`, `k = T / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, n_steps: usize) -> Result<Self> {
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("need at least one time step".into()));
        }
        Ok(Self {
            final_time,
            n_steps,
        })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.final_time / self.n_steps as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.final_time
        } else {
            n as f64 * self.step()
        }
    }
}

/// `N + 1` coefficient vectors of equal length, level `n` sitting at `t_n`.
///
/// States, controls and adjoint states all share this layout. Data is stored
/// contiguously so that whole trajectories can be handed to Krylov solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_dof: usize,
    n_steps: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(n_steps: usize, n_dof: usize) -> Self {
        Self {
            n_dof,
            n_steps,
            data: vec![0.0; (n_steps + 1) * n_dof],
        }
    }

    pub fn from_flat(n_steps: usize, n_dof: usize, data: Vec<f64>) -> Result<Self> {
        check_len("trajectory data", (n_steps + 1) * n_dof, data.len())?;
        Ok(Self {
            n_dof,
            n_steps,
            data,
        })
    }

    pub fn from_levels(levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("trajectory needs at least one level".into()));
        }
        let n_dof = levels[0].len();
        let n_steps = levels.len() - 1;
        let mut data = Vec::with_capacity(levels.len() * n_dof);
        for level in &levels {
            check_len("trajectory level", n_dof, level.len())?;
            data.extend_from_slice(level);
        }
        Ok(Self {
            n_dof,
            n_steps,
            data,
        })
    }

    /// Builds level `n` from `f(n, t_n)`.
    pub fn from_fn<F>(time: &TimeGrid, n_dof: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, f64) -> Vec<f64>,
    {
        let levels = (0..=time.n_steps()).map(|n| f(n, time.t(n))).collect();
        let traj = Self::from_levels(levels)?;
        check_len("trajectory level", n_dof, traj.n_dof)?;
        Ok(traj)
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_dof..(n + 1) * self.n_dof]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_dof..(n + 1) * self.n_dof]
    }

    pub fn final_level(&self) -> &[f64] {
        self.level(self.n_steps)
    }

    pub fn levels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_dof.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &Trajectory) -> bool {
        self.n_dof == other.n_dof && self.n_steps == other.n_steps
    }

    pub(crate) fn check_shape(
        &self,
        context: &'static str,
        n_steps: usize,
        n_dof: usize,
    ) -> Result<()> {
        check_len(context, n_steps, self.n_steps)?;
        check_len(context, n_dof, self.n_dof)
    }

    pub fn scaled(&self, alpha: f64) -> Trajectory {
        Trajectory {
            n_dof: self.n_dof,
            n_steps: self.n_steps,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Trajectory) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
