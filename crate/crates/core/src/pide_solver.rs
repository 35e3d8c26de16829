//! Fully discrete solver for `y' + A y = ∫₀ᵗ B(t, s) y(s) ds + G u`.
//!
//! Backward Euler in time, piecewise-linear elements in space, and the left
//! rectangle rule for the Volterra term:
//!
//! ```text
//! (M + kA) yⁿ = M yⁿ⁻¹ + k Σ_{j<n} k κ(t_n, t_j) B₀ yʲ + k M G uⁿ
//! ```
//!
//! `B₀` is either the mass or the stiffness matrix. The transposed recursions
//! used by the discrete adjoints live here as well so that forward and
//! reverse sweeps share one definition of the memory sum.

use std::fmt;
use std::sync::Arc;

use crate::discretization::{assemble_mass, assemble_stiffness, SpatialGrid};
use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{axpy, SymTridiagFactor, TridiagMatrix};
use crate::time::{TimeGrid, Trajectory};

/// Spatial part of the memory operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialForm {
    /// `B(t,s) = κ(t,s) I`, assembled with the mass matrix.
    Mass,
    /// `B(t,s) = κ(t,s) (−Δ)`, assembled with the stiffness matrix.
    Stiffness,
}

/// Scalar factor `κ(t, s)` of the memory operator.
#[derive(Clone)]
pub enum KernelKind {
    None,
    /// `κ(t, s) = amplitude · exp(−rate (t − s))`; runs in O(N) by recurrence.
    Exponential { amplitude: f64, rate: f64 },
    /// `κ(t, s) = f(t − s)`.
    Separable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    General(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::None => write!(f, "None"),
            KernelKind::Exponential { amplitude, rate } => f
                .debug_struct("Exponential")
                .field("amplitude", amplitude)
                .field("rate", rate)
                .finish(),
            KernelKind::Separable(_) => write!(f, "Separable(..)"),
            KernelKind::General(_) => write!(f, "General(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub form: SpatialForm,
}

impl KernelSpec {
    pub fn none() -> Self {
        Self {
            kind: KernelKind::None,
            form: SpatialForm::Mass,
        }
    }

    pub fn exponential(amplitude: f64, rate: f64, form: SpatialForm) -> Self {
        Self {
            kind: KernelKind::Exponential { amplitude, rate },
            form,
        }
    }

    pub fn separable<F>(f: F, form: SpatialForm) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: KernelKind::Separable(Arc::new(f)),
            form,
        }
    }

    pub fn general<F>(f: F, form: SpatialForm) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: KernelKind::General(Arc::new(f)),
            form,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, KernelKind::None)
    }

    pub fn kappa(&self, t: f64, s: f64) -> f64 {
        match &self.kind {
            KernelKind::None => 0.0,
            KernelKind::Exponential { amplitude, rate } => amplitude * (-rate * (t - s)).exp(),
            KernelKind::Separable(f) => f(t - s),
            KernelKind::General(f) => f(t, s),
        }
    }

    fn validate(&self) -> Result<()> {
        if let KernelKind::Exponential { amplitude, rate } = self.kind {
            if !amplitude.is_finite() || !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "exponential kernel needs finite amplitude and rate ≥ 0, got ({amplitude}, {rate})"
                )));
            }
        }
        Ok(())
    }
}

/// Distributed control operator `G`: a coefficient mask `g_i ∈ [0, 1]`.
///
/// `G u = diag(g) u`. Its adjoint in the mass inner product is
/// `G* w = M⁻¹ diag(g) M w`, which reduces to the identity for a full window.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlWindow {
    weights: Vec<f64>,
    full: bool,
}

impl ControlWindow {
    pub fn full(n_dof: usize) -> Self {
        Self {
            weights: vec![1.0; n_dof],
            full: true,
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParameter(
                "control window weights must lie in [0, 1]".into(),
            ));
        }
        let full = weights.iter().all(|&w| w == 1.0);
        Ok(Self { weights, full })
    }

    /// Indicator of the nodes with `lo ≤ x ≤ hi`.
    pub fn indicator(grid: &SpatialGrid, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "control window needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Self::from_weights(
            grid.nodes()
                .iter()
                .map(|&x| if x >= lo && x <= hi { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn apply_in_place(&self, v: &mut [f64]) {
        if !self.full {
            v.iter_mut().zip(&self.weights).for_each(|(a, g)| *a *= g);
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    /// `M⁻¹ diag(g) M w`, the mass-inner-product adjoint of [`apply`](Self::apply).
    pub fn adjoint(&self, ctx: &SolverContext, w: &[f64]) -> Vec<f64> {
        if self.full {
            return w.to_vec();
        }
        let mut mw = ctx.mass().mul(w);
        self.apply_in_place(&mut mw);
        ctx.mass_factor().solve_in_place(&mut mw);
        mw
    }
}

/// Assembled matrices and factorizations for one (grid, time grid) pair.
///
/// Immutable after construction; every solve allocates its own workspace.
#[derive(Debug, Clone)]
pub struct SolverContext {
    grid: SpatialGrid,
    time: TimeGrid,
    mass: TridiagMatrix,
    stiffness: TridiagMatrix,
    step_factor: SymTridiagFactor,
    mass_factor: SymTridiagFactor,
}

impl SolverContext {
    pub fn new(grid: SpatialGrid, time: TimeGrid) -> Result<Self> {
        let mass = assemble_mass(&grid);
        let stiffness = assemble_stiffness(&grid);
        let step_factor = mass.add_scaled(time.step(), &stiffness).factor()?;
        let mass_factor = mass.factor()?;
        Ok(Self {
            grid,
            time,
            mass,
            stiffness,
            step_factor,
            mass_factor,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn n_dof(&self) -> usize {
        self.grid.n_dof()
    }

    pub fn n_steps(&self) -> usize {
        self.time.n_steps()
    }

    pub fn step(&self) -> f64 {
        self.time.step()
    }

    pub fn mass(&self) -> &TridiagMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &TridiagMatrix {
        &self.stiffness
    }

    pub fn mass_factor(&self) -> &SymTridiagFactor {
        &self.mass_factor
    }

    pub fn step_factor(&self) -> &SymTridiagFactor {
        &self.step_factor
    }

    pub fn zero_trajectory(&self) -> Trajectory {
        Trajectory::zeros(self.n_steps(), self.n_dof())
    }

    fn memory_matrix(&self, form: SpatialForm) -> &TridiagMatrix {
        match form {
            SpatialForm::Mass => &self.mass,
            SpatialForm::Stiffness => &self.stiffness,
        }
    }

    fn check_trajectory(&self, context: &'static str, traj: &Trajectory) -> Result<()> {
        traj.check_shape(context, self.n_steps(), self.n_dof())?;
        if traj.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    fn check_vector(&self, context: &'static str, v: &[f64]) -> Result<()> {
        check_len(context, self.n_dof(), v.len())?;
        check_finite(context, v)
    }
}

/// Left-rectangle memory sums `Σ_{j<n} k κ(t_n, t_j) B₀ yʲ`, built level by level.
enum MemoryHistory<'a> {
    None,
    Exponential {
        decay: f64,
        weight: f64,
        acc: Vec<f64>,
    },
    Quadrature {
        kernel: &'a KernelSpec,
        loads: Vec<Vec<f64>>,
    },
}

impl<'a> MemoryHistory<'a> {
    fn new(ctx: &SolverContext, kernel: &'a KernelSpec) -> Self {
        let k = ctx.step();
        match kernel.kind {
            KernelKind::None => MemoryHistory::None,
            KernelKind::Exponential { amplitude, rate } => MemoryHistory::Exponential {
                decay: (-rate * k).exp(),
                weight: k * amplitude,
                acc: vec![0.0; ctx.n_dof()],
            },
            _ => MemoryHistory::Quadrature {
                kernel,
                loads: Vec::with_capacity(ctx.n_steps()),
            },
        }
    }

    /// Records `y^{n-1}` and adds `scale · memⁿ` to `out`.
    fn advance(
        &mut self,
        ctx: &SolverContext,
        form: SpatialForm,
        n: usize,
        prev: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        let b0 = ctx.memory_matrix(form);
        let k = ctx.step();
        match self {
            MemoryHistory::None => {}
            MemoryHistory::Exponential { decay, weight, acc } => {
                b0.mul_add_into(*weight, prev, acc);
                acc.iter_mut().for_each(|a| *a *= *decay);
                axpy(scale, acc, out);
            }
            MemoryHistory::Quadrature { kernel, loads } => {
                loads.push(b0.mul(prev));
                let tn = ctx.time().t(n);
                for (j, load) in loads.iter().enumerate() {
                    let w = k * kernel.kappa(tn, ctx.time().t(j));
                    axpy(scale * w, load, out);
                }
            }
        }
    }
}

/// Reverse-time counterpart: `qⁿ = Σ_{j>n} k κ(t_j, t_n) B₀ λʲ`.
enum AdjointHistory<'a> {
    None,
    Exponential {
        decay: f64,
        weight: f64,
        acc: Vec<f64>,
    },
    Quadrature {
        kernel: &'a KernelSpec,
        // loads[j] = B₀ λʲ for the levels visited so far
        loads: Vec<(usize, Vec<f64>)>,
    },
}

impl<'a> AdjointHistory<'a> {
    fn new(ctx: &SolverContext, kernel: &'a KernelSpec) -> Self {
        let k = ctx.step();
        match kernel.kind {
            KernelKind::None => AdjointHistory::None,
            KernelKind::Exponential { amplitude, rate } => AdjointHistory::Exponential {
                decay: (-rate * k).exp(),
                weight: k * amplitude,
                acc: vec![0.0; ctx.n_dof()],
            },
            _ => AdjointHistory::Quadrature {
                kernel,
                loads: Vec::with_capacity(ctx.n_steps()),
            },
        }
    }

    /// Records `λ^{n+1}` and adds `scale · qⁿ` to `out`.
    fn retreat(
        &mut self,
        ctx: &SolverContext,
        form: SpatialForm,
        n: usize,
        next: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        let b0 = ctx.memory_matrix(form);
        let k = ctx.step();
        match self {
            AdjointHistory::None => {}
            AdjointHistory::Exponential { decay, weight, acc } => {
                b0.mul_add_into(*weight, next, acc);
                acc.iter_mut().for_each(|a| *a *= *decay);
                axpy(scale, acc, out);
            }
            AdjointHistory::Quadrature { kernel, loads } => {
                loads.push((n + 1, b0.mul(next)));
                let tn = ctx.time().t(n);
                for (j, load) in loads.iter() {
                    let w = k * kernel.kappa(ctx.time().t(*j), tn);
                    axpy(scale * w, load, out);
                }
            }
        }
    }
}

/// State trajectory of the integro-differential equation under control `u`.
///
/// Level 0 of `u` is ignored; the control enters each step at the new time level.
pub fn solve_forward(
    ctx: &SolverContext,
    kernel: &KernelSpec,
    window: &ControlWindow,
    u: &Trajectory,
    y0: &[f64],
) -> Result<Trajectory> {
    ctx.check_trajectory("control", u)?;
    ctx.check_vector("initial state", y0)?;
    check_len("control window", ctx.n_dof(), window.weights().len())?;
    kernel.validate()?;

    let k = ctx.step();
    let mut y = ctx.zero_trajectory();
    y.level_mut(0).copy_from_slice(y0);
    let mut history = MemoryHistory::new(ctx, kernel);
    let mut rhs = vec![0.0; ctx.n_dof()];
    let mut gu = vec![0.0; ctx.n_dof()];

    for n in 1..=ctx.n_steps() {
        let prev = y.level(n - 1).to_vec();
        ctx.mass().mul_into(&prev, &mut rhs);
        history.advance(ctx, kernel.form, n, &prev, k, &mut rhs);
        gu.copy_from_slice(u.level(n));
        window.apply_in_place(&mut gu);
        ctx.mass().mul_add_into(k, &gu, &mut rhs);
        ctx.step_factor().solve_in_place(&mut rhs);
        y.level_mut(n).copy_from_slice(&rhs);
    }
    Ok(y)
}

/// Memory-free heat solve `(M + kA) yⁿ = M yⁿ⁻¹ + k M fⁿ`; with `f ≡ 0` this
/// is the discrete semigroup.
pub fn solve_heat(ctx: &SolverContext, f: &Trajectory, y0: &[f64]) -> Result<Trajectory> {
    ctx.check_trajectory("source", f)?;
    ctx.check_vector("initial state", y0)?;
    let k = ctx.step();
    let mut y = ctx.zero_trajectory();
    y.level_mut(0).copy_from_slice(y0);
    let mut rhs = vec![0.0; ctx.n_dof()];
    for n in 1..=ctx.n_steps() {
        let prev = y.level(n - 1).to_vec();
        ctx.mass().mul_into(&prev, &mut rhs);
        ctx.mass().mul_add_into(k, f.level(n), &mut rhs);
        ctx.step_factor().solve_in_place(&mut rhs);
        y.level_mut(n).copy_from_slice(&rhs);
    }
    Ok(y)
}

/// Discrete semigroup applied to `y0` over the whole horizon.
pub fn propagate_free(ctx: &SolverContext, y0: &[f64]) -> Result<Vec<f64>> {
    ctx.check_vector("initial state", y0)?;
    let mut y = y0.to_vec();
    let mut rhs = vec![0.0; ctx.n_dof()];
    for _ in 0..ctx.n_steps() {
        ctx.mass().mul_into(&y, &mut rhs);
        ctx.step_factor().solve_in_place(&mut rhs);
        y.copy_from_slice(&rhs);
    }
    Ok(y)
}

/// Volterra term `(B̃y)(t_n) ≈ M⁻¹ Σ_{j<n} k κ(t_n, t_j) B₀ yʲ` as an element
/// of the finite element space; level 0 is zero.
pub fn apply_memory(ctx: &SolverContext, kernel: &KernelSpec, y: &Trajectory) -> Result<Trajectory> {
    ctx.check_trajectory("state", y)?;
    kernel.validate()?;
    let mut w = ctx.zero_trajectory();
    if kernel.is_none() {
        return Ok(w);
    }
    let mut history = MemoryHistory::new(ctx, kernel);
    for n in 1..=ctx.n_steps() {
        let out = w.level_mut(n);
        history.advance(ctx, kernel.form, n, y.level(n - 1), 1.0, out);
        ctx.mass_factor().solve_in_place(out);
    }
    Ok(w)
}

/// Transposed sweep of [`solve_forward`] from the terminal datum `z`:
///
/// ```text
/// (M + kA) λᴺ = M z
/// (M + kA) λⁿ = M λⁿ⁺¹ + k Σ_{j>n} k κ(t_j, t_n) B₀ λʲ
/// ```
///
/// For `v` with `v⁰ = 0`, `zᵀ M y(N) = Σₙ k λⁿᵀ M (G uⁿ)` where `y` solves the
/// forward recursion from zero initial data. Level 0 of the result is zero.
pub fn adjoint_sweep(ctx: &SolverContext, kernel: &KernelSpec, z: &[f64]) -> Result<Trajectory> {
    ctx.check_vector("terminal datum", z)?;
    kernel.validate()?;
    let k = ctx.step();
    let n_steps = ctx.n_steps();
    let mut lam = ctx.zero_trajectory();
    let mut rhs = ctx.mass().mul(z);
    ctx.step_factor().solve_in_place(&mut rhs);
    lam.level_mut(n_steps).copy_from_slice(&rhs);

    let mut history = AdjointHistory::new(ctx, kernel);
    for n in (1..n_steps).rev() {
        let next = lam.level(n + 1).to_vec();
        ctx.mass().mul_into(&next, &mut rhs);
        history.retreat(ctx, kernel.form, n, &next, k, &mut rhs);
        ctx.step_factor().solve_in_place(&mut rhs);
        lam.level_mut(n).copy_from_slice(&rhs);
    }
    Ok(lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, project_l2, DiscreteModes};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    const PI2: f64 = PI * PI;

    fn ctx(n_cells: usize, n_steps: usize) -> SolverContext {
        SolverContext::new(build_grid(n_cells).unwrap(), TimeGrid::new(1.0, n_steps).unwrap())
            .unwrap()
    }

    fn random_traj(ctx: &SolverContext, rng: &mut StdRng) -> Trajectory {
        let mut t = ctx.zero_trajectory();
        for n in 1..=ctx.n_steps() {
            t.level_mut(n)
                .iter_mut()
                .for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        t
    }

    fn m_norm(ctx: &SolverContext, v: &[f64]) -> f64 {
        ctx.mass().quad_form(v, v).sqrt()
    }

    #[test]
    fn zero_dynamics() {
        let c = ctx(8, 10);
        let y = solve_forward(
            &c,
            &KernelSpec::none(),
            &ControlWindow::full(c.n_dof()),
            &c.zero_trajectory(),
            &vec![0.0; c.n_dof()],
        )
        .unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
        let y = solve_heat(&c, &c.zero_trajectory(), &vec![0.0; c.n_dof()]).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heat_mode_follows_scalar_recursion() {
        let c = ctx(16, 20);
        let modes = DiscreteModes::new(c.grid());
        let v = modes.vector(0).to_vec();
        let lam = modes.eigenvalue(0);
        let y = solve_heat(&c, &c.zero_trajectory(), &v).unwrap();
        let k = c.step();
        for n in 0..=20 {
            let factor = (1.0 + k * lam).powi(-(n as i32));
            for (a, b) in y.level(n).iter().zip(&v) {
                assert!((a - factor * b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn heat_decay_approaches_exact_solution() {
        let c = ctx(64, 4000);
        let y0 = project_l2(c.grid(), |x| (PI * x).sin());
        let y = solve_heat(&c, &c.zero_trajectory(), &y0).unwrap();
        let exact: Vec<f64> = y0.iter().map(|v| v * (-PI2).exp()).collect();
        let diff: Vec<f64> = y.final_level().iter().zip(&exact).map(|(a, b)| a - b).collect();
        // backward Euler error ≈ T k λ² / 2 relative plus O(h²)
        assert!(m_norm(&c, &diff) / m_norm(&c, &exact) < 0.02);
    }

    #[test]
    fn memory_of_constant_trajectory_is_exact() {
        let c = ctx(6, 8);
        let v: Vec<f64> = (0..c.n_dof()).map(|i| 0.1 * i as f64 + 0.3).collect();
        let y = Trajectory::from_fn(c.time(), c.n_dof(), |_, _| v.clone()).unwrap();
        let w = apply_memory(&c, &KernelSpec::exponential(1.0, 0.0, SpatialForm::Mass), &y).unwrap();
        for n in 0..=8 {
            let tn = c.time().t(n);
            for (a, b) in w.level(n).iter().zip(&v) {
                assert!((a - tn * b).abs() < 1e-13, "level {n}");
            }
        }
        let w = apply_memory(&c, &KernelSpec::none(), &y).unwrap();
        assert!(w.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn memory_of_decaying_mode_matches_convolution() {
        let c = ctx(6, 2000);
        let v = vec![1.0; c.n_dof()];
        let y = Trajectory::from_fn(c.time(), c.n_dof(), |_, t| {
            v.iter().map(|x| x * (-PI2 * t).exp()).collect()
        })
        .unwrap();
        let kernel = KernelSpec::exponential(1.0, PI2, SpatialForm::Mass);
        let w = apply_memory(&c, &kernel, &y).unwrap();
        for n in [500, 1000, 2000] {
            let t = c.time().t(n);
            let exact = t * (-PI2 * t).exp();
            // left rule on e^{-π²(t−s)} e^{-π² s} is exact: the integrand is constant in s
            assert!((w.level(n)[2] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_fast_path_matches_quadrature() {
        let c = ctx(10, 30);
        let mut rng = StdRng::seed_from_u64(1);
        let u = random_traj(&c, &mut rng);
        let y0: Vec<f64> = (0..c.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let window = ControlWindow::full(c.n_dof());
        for form in [SpatialForm::Mass, SpatialForm::Stiffness] {
            let fast = KernelSpec::exponential(0.7, 3.0, form);
            let slow = KernelSpec::general(|t, s| 0.7 * (-3.0 * (t - s)).exp(), form);
            let sep = KernelSpec::separable(|d| 0.7 * (-3.0 * d).exp(), form);
            let a = solve_forward(&c, &fast, &window, &u, &y0).unwrap();
            let b = solve_forward(&c, &slow, &window, &u, &y0).unwrap();
            let d = solve_forward(&c, &sep, &window, &u, &y0).unwrap();
            for ((x, y), z) in a.as_slice().iter().zip(b.as_slice()).zip(d.as_slice()) {
                assert!((x - y).abs() < 1e-12 * (1.0 + x.abs()));
                assert!((x - z).abs() < 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn unconditional_stability() {
        let c = ctx(32, 5);
        let mut rng = StdRng::seed_from_u64(2);
        let y0: Vec<f64> = (0..c.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = solve_forward(
            &c,
            &KernelSpec::none(),
            &ControlWindow::full(c.n_dof()),
            &c.zero_trajectory(),
            &y0,
        )
        .unwrap();
        let n0 = m_norm(&c, &y0);
        let mut prev = n0;
        for n in 1..=5 {
            let cur = m_norm(&c, y.level(n));
            assert!(cur <= prev * (1.0 + 1e-14));
            prev = cur;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = ctx(8, 10);
        let w = ControlWindow::full(c.n_dof());
        let k = KernelSpec::none();
        let bad_u = Trajectory::zeros(9, c.n_dof());
        assert!(matches!(
            solve_forward(&c, &k, &w, &bad_u, &vec![0.0; c.n_dof()]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(solve_forward(&c, &k, &w, &c.zero_trajectory(), &[0.0; 3]).is_err());
        let mut nan_u = c.zero_trajectory();
        nan_u.level_mut(3)[0] = f64::NAN;
        assert!(matches!(
            solve_forward(&c, &k, &w, &nan_u, &vec![0.0; c.n_dof()]),
            Err(Error::NonFinite(_))
        ));
        assert!(ControlWindow::from_weights(vec![1.5]).is_err());
    }

    #[test]
    fn window_adjoint_in_mass_inner_product() {
        let c = ctx(12, 2);
        let w = ControlWindow::indicator(c.grid(), 0.2, 0.6).unwrap();
        assert!(!w.is_full());
        let mut rng = StdRng::seed_from_u64(4);
        let a: Vec<f64> = (0..c.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..c.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = c.mass().quad_form(&w.apply(&a), &b);
        let rhs = c.mass().quad_form(&a, &w.adjoint(&c, &b));
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
