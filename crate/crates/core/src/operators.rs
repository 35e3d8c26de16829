//! Discrete realizations of the control-theoretic operators.
//!
//! With `X` the element space under the mass inner product and `Y`
//! trajectories under `⟨u, v⟩_Y = Σ_{n=1}^{N} k ⟨uⁿ, vⁿ⟩_X`:
//!
//! * `L v`: final state of the memory-free heat solve driven by `v`;
//! * `E u = y(T; u, y0) − S_h(T) y0`, affine in `u`, split as `E_lin u + E(0)`;
//! * `E*`, `L*`: exact transposes of the discrete recursions;
//! * `L G G* L*`: the memory-free controllability Gramian.
//!
//! Adjoints are transposes of the fully discrete maps, so every duality
//! pairing holds to roundoff at any resolution.

use crate::discretization::DiscreteModes;
use crate::error::{check_finite, check_len, Result};
use crate::linalg::{conjugate_gradient, CgOutcome};
use crate::pide_solver::{
    adjoint_sweep, apply_memory, propagate_free, solve_forward, solve_heat, ControlWindow,
    KernelSpec, SolverContext,
};
use crate::time::Trajectory;

/// Everything needed to evaluate the control operators of one problem.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    solver: SolverContext,
    kernel: KernelSpec,
    window: ControlWindow,
    initial_state: Vec<f64>,
    target: Vec<f64>,
    free_final: Vec<f64>,
    modes: DiscreteModes,
}

impl OperatorContext {
    pub fn new(
        solver: SolverContext,
        kernel: KernelSpec,
        window: ControlWindow,
        initial_state: Vec<f64>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let n = solver.n_dof();
        check_len("control window", n, window.weights().len())?;
        check_len("initial state", n, initial_state.len())?;
        check_len("target", n, target.len())?;
        check_finite("target", &target)?;
        let free_final = propagate_free(&solver, &initial_state)?;
        let modes = DiscreteModes::new(solver.grid());
        Ok(Self {
            solver,
            kernel,
            window,
            initial_state,
            target,
            free_final,
            modes,
        })
    }

    pub fn solver(&self) -> &SolverContext {
        &self.solver
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn window(&self) -> &ControlWindow {
        &self.window
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn modes(&self) -> &DiscreteModes {
        &self.modes
    }

    pub fn n_dof(&self) -> usize {
        self.solver.n_dof()
    }

    pub fn n_steps(&self) -> usize {
        self.solver.n_steps()
    }

    /// `S_h(T) y0`.
    pub fn free_final_state(&self) -> &[f64] {
        &self.free_final
    }

    /// `ẑ = ŷ − S_h(T) y0`.
    pub fn z_hat(&self) -> Vec<f64> {
        self.target
            .iter()
            .zip(&self.free_final)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Same problem with a different kernel.
    pub fn with_kernel(&self, kernel: KernelSpec) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }

    /// Same problem with a different target state.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        check_len("target", self.n_dof(), target.len())?;
        Ok(Self {
            target,
            ..self.clone()
        })
    }

    pub fn zero_control(&self) -> Trajectory {
        self.solver.zero_trajectory()
    }

    pub fn x_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.solver.mass().quad_form(a, b)
    }

    pub fn x_norm(&self, a: &[f64]) -> f64 {
        self.x_inner(a, a).max(0.0).sqrt()
    }

    /// `Σ_{n=1}^{N} k ⟨uⁿ, vⁿ⟩_X` on flattened trajectories.
    pub fn y_inner_flat(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n_dof();
        let k = self.solver.step();
        let mass = self.solver.mass();
        u.chunks_exact(n)
            .zip(v.chunks_exact(n))
            .skip(1)
            .map(|(a, b)| mass.quad_form(a, b))
            .sum::<f64>()
            * k
    }

    pub fn y_inner(&self, u: &Trajectory, v: &Trajectory) -> f64 {
        self.y_inner_flat(u.as_slice(), v.as_slice())
    }

    pub fn y_norm(&self, u: &Trajectory) -> f64 {
        self.y_inner(u, u).max(0.0).sqrt()
    }

    /// `Σ_{n=1}^{N} k ⟨yⁿ, yⁿ⟩_X`; the state space `Z` uses the same weights.
    pub fn z_norm(&self, y: &Trajectory) -> f64 {
        self.y_norm(y)
    }

    /// State trajectory under `u` from the configured initial state.
    pub fn state(&self, u: &Trajectory) -> Result<Trajectory> {
        solve_forward(&self.solver, &self.kernel, &self.window, u, &self.initial_state)
    }

    /// `L v = ∫₀ᵀ S(T−τ) v(τ) dτ`, discretely the final heat state from zero.
    pub fn apply_l(&self, v: &Trajectory) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.n_dof()];
        Ok(solve_heat(&self.solver, v, &zero)?.final_level().to_vec())
    }

    pub fn apply_l_adjoint(&self, z: &[f64]) -> Result<Trajectory> {
        adjoint_sweep(&self.solver, &KernelSpec::none(), z)
    }

    /// `E u = y(N; u, y0) − S_h(T) y0`.
    pub fn apply_e(&self, u: &Trajectory) -> Result<Vec<f64>> {
        let y = self.state(u)?;
        Ok(y.final_level()
            .iter()
            .zip(&self.free_final)
            .map(|(a, b)| a - b)
            .collect())
    }

    /// `E(0)`: the final-state drift caused by the memory term alone.
    pub fn offset(&self) -> Result<Vec<f64>> {
        self.apply_e(&self.zero_control())
    }

    /// Linear part `E u − E(0)`, evaluated as the final state from zero
    /// initial data (equal by superposition, without the cancellation).
    pub fn apply_e_lin(&self, u: &Trajectory) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.n_dof()];
        let y = solve_forward(&self.solver, &self.kernel, &self.window, u, &zero)?;
        Ok(y.final_level().to_vec())
    }

    /// `L (G u + B̃ W u)` composed from separate heat, memory and state solves.
    /// Agrees with [`apply_e`](Self::apply_e) by the discrete Duhamel identity.
    pub fn apply_e_composed(&self, u: &Trajectory) -> Result<Vec<f64>> {
        let y = self.state(u)?;
        let mut forcing = apply_memory(&self.solver, &self.kernel, &y)?;
        for n in 1..=self.n_steps() {
            let gu = self.window.apply(u.level(n));
            crate::linalg::axpy(1.0, &gu, forcing.level_mut(n));
        }
        self.apply_l(&forcing)
    }

    /// `𝒦 z = E_lin* z`: the reverse sweep including the transposed memory
    /// coupling, followed by `G*` on every level.
    pub fn apply_e_adjoint(&self, z: &[f64]) -> Result<Trajectory> {
        let mut p = adjoint_sweep(&self.solver, &self.kernel, z)?;
        if !self.window.is_full() {
            for n in 1..=self.n_steps() {
                let g = self.window.adjoint(&self.solver, p.level(n));
                p.level_mut(n).copy_from_slice(&g);
            }
        }
        Ok(p)
    }

    /// `G* L* z`
    pub fn control_from_final(&self, z: &[f64]) -> Result<Trajectory> {
        let mut p = self.apply_l_adjoint(z)?;
        if !self.window.is_full() {
            for n in 1..=self.n_steps() {
                let g = self.window.adjoint(&self.solver, p.level(n));
                p.level_mut(n).copy_from_slice(&g);
            }
        }
        Ok(p)
    }

    /// `L G G* L* z`.
    pub fn apply_gramian(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.control_from_final(z)?;
        for n in 1..=self.n_steps() {
            self.window.apply_in_place(v.level_mut(n));
        }
        self.apply_l(&v)
    }

    /// Solves `(δ I + L G G* L*) w = r` by conjugate gradients in the mass
    /// inner product.
    pub fn solve_resolvent(
        &self,
        delta: f64,
        r: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<CgOutcome> {
        if !(delta > 0.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "resolvent parameter must be positive, got {delta}"
            )));
        }
        check_len("resolvent right-hand side", self.n_dof(), r.len())?;
        conjugate_gradient(
            |w| {
                let mut out = self.apply_gramian(w)?;
                crate::linalg::axpy(delta, w, &mut out);
                Ok(out)
            },
            |a, b| self.x_inner(a, b),
            r,
            tol,
            max_iter,
            "resolvent CG",
        )
    }

    /// `‖L B̃ y‖_X`, the quantity bounded by `C ∫ ‖y‖_X`.
    pub fn memory_response(&self, y: &Trajectory) -> Result<Vec<f64>> {
        let w = apply_memory(&self.solver, &self.kernel, y)?;
        self.apply_l(&w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, project_l2};
    use crate::pide_solver::SpatialForm;
    use crate::time::TimeGrid;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    const PI2: f64 = PI * PI;

    fn context(n_cells: usize, n_steps: usize, kernel: KernelSpec, window: Option<(f64, f64)>) -> OperatorContext {
        let grid = build_grid(n_cells).unwrap();
        let solver = SolverContext::new(grid.clone(), TimeGrid::new(1.0, n_steps).unwrap()).unwrap();
        let w = match window {
            Some((a, b)) => ControlWindow::indicator(&grid, a, b).unwrap(),
            None => ControlWindow::full(grid.n_dof()),
        };
        let y0 = project_l2(&grid, |x| (PI * x).sin());
        let target = y0.iter().map(|v| v * (-PI2).exp()).collect();
        OperatorContext::new(solver, kernel, w, y0, target).unwrap()
    }

    fn random_control(ctx: &OperatorContext, rng: &mut StdRng) -> Trajectory {
        let mut t = ctx.zero_control();
        for n in 1..=ctx.n_steps() {
            t.level_mut(n).iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        t
    }

    fn random_vec(n: usize, rng: &mut StdRng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn reference_kernel() -> KernelSpec {
        KernelSpec::exponential(1.0, PI2, SpatialForm::Mass)
    }

    #[test]
    fn l_zero_and_linear() {
        let ctx = context(16, 20, KernelSpec::none(), None);
        assert!(ctx.apply_l(&ctx.zero_control()).unwrap().iter().all(|&v| v == 0.0));
        let mut rng = StdRng::seed_from_u64(9);
        let v = random_control(&ctx, &mut rng);
        let a = ctx.apply_l(&v).unwrap();
        let b = ctx.apply_l(&v.scaled(2.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn l_on_constant_mode_matches_closed_form() {
        let ctx = context(128, 2000, KernelSpec::none(), None);
        let phi = ctx.modes().vector(0).to_vec();
        let v = Trajectory::from_fn(ctx.solver().time(), ctx.n_dof(), |_, _| phi.clone()).unwrap();
        let out = ctx.apply_l(&v).unwrap();
        let coeff = ctx.x_inner(&out, &phi);
        let exact = (1.0 - (-PI2).exp()) / PI2;
        assert!((exact - 0.101316).abs() < 1e-6);
        assert!((coeff - exact).abs() < 1e-3 * exact, "{coeff} vs {exact}");
    }

    #[test]
    fn l_adjoint_dot_test() {
        let ctx = context(20, 15, reference_kernel(), None);
        let mut rng = StdRng::seed_from_u64(10);
        assert!(ctx
            .apply_l_adjoint(&vec![0.0; ctx.n_dof()])
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        for _ in 0..10 {
            let v = random_control(&ctx, &mut rng);
            let z = random_vec(ctx.n_dof(), &mut rng);
            let lhs = ctx.x_inner(&ctx.apply_l(&v).unwrap(), &z);
            let rhs = ctx.y_inner(&v, &ctx.apply_l_adjoint(&z).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
        }
    }

    #[test]
    fn l_adjoint_on_mode_decays_backward() {
        let ctx = context(128, 2000, KernelSpec::none(), None);
        let phi = ctx.modes().vector(0).to_vec();
        let p = ctx.apply_l_adjoint(&phi).unwrap();
        for n in [1, 1000, 2000] {
            let t = ctx.solver().time().t(n);
            let c = ctx.x_inner(p.level(n), &phi);
            let exact = (-PI2 * (1.0 - t)).exp();
            assert!((c - exact).abs() < 5e-3, "n={n}: {c} vs {exact}");
        }
    }

    #[test]
    fn e_vanishes_without_data() {
        let grid = build_grid(10).unwrap();
        let solver = SolverContext::new(grid.clone(), TimeGrid::new(1.0, 10).unwrap()).unwrap();
        let ctx = OperatorContext::new(
            solver,
            reference_kernel(),
            ControlWindow::full(9),
            vec![0.0; 9],
            vec![0.0; 9],
        )
        .unwrap();
        assert!(ctx.apply_e(&ctx.zero_control()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn e_lin_matches_difference_definition_and_is_linear() {
        let ctx = context(16, 16, reference_kernel(), Some((0.1, 0.7)));
        let mut rng = StdRng::seed_from_u64(12);
        let u1 = random_control(&ctx, &mut rng);
        let u2 = random_control(&ctx, &mut rng);
        assert!(ctx.apply_e_lin(&ctx.zero_control()).unwrap().iter().all(|&v| v == 0.0));
        let e0 = ctx.offset().unwrap();
        let e1 = ctx.apply_e(&u1).unwrap();
        let lin1 = ctx.apply_e_lin(&u1).unwrap();
        for ((a, b), c) in e1.iter().zip(&e0).zip(&lin1) {
            assert!((a - b - c).abs() < 1e-12 * (1.0 + c.abs()));
        }
        let mut sum = u1.clone();
        sum.axpy(1.0, &u2);
        let ls = ctx.apply_e_lin(&sum).unwrap();
        let l2 = ctx.apply_e_lin(&u2).unwrap();
        for ((s, a), b) in ls.iter().zip(&lin1).zip(&l2) {
            assert!((s - a - b).abs() < 1e-12 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn e_lin_without_memory_is_lg() {
        let ctx = context(16, 16, KernelSpec::none(), Some((0.3, 0.9)));
        let mut rng = StdRng::seed_from_u64(13);
        let u = random_control(&ctx, &mut rng);
        let mut gu = u.clone();
        for n in 0..=ctx.n_steps() {
            ctx.window().apply_in_place(gu.level_mut(n));
        }
        let a = ctx.apply_e_lin(&u).unwrap();
        let b = ctx.apply_l(&gu).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn composed_e_matches_duhamel_route() {
        for kernel in [reference_kernel(), KernelSpec::exponential(0.5, 1.0, SpatialForm::Stiffness)] {
            let ctx = context(16, 24, kernel, Some((0.2, 0.8)));
            let mut rng = StdRng::seed_from_u64(14);
            let u = random_control(&ctx, &mut rng);
            let a = ctx.apply_e(&u).unwrap();
            let b = ctx.apply_e_composed(&u).unwrap();
            let scale = ctx.x_norm(&a);
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(ctx.x_norm(&diff) <= 1e-12 * scale);
        }
    }

    fn dot_test(ctx: &OperatorContext, seed: u64) -> f64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let u = random_control(ctx, &mut rng);
            let z = random_vec(ctx.n_dof(), &mut rng);
            let lhs = ctx.x_inner(&ctx.apply_e_lin(&u).unwrap(), &z);
            let rhs = ctx.y_inner(&u, &ctx.apply_e_adjoint(&z).unwrap());
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
        worst
    }

    #[test]
    fn e_adjoint_dot_test_all_kernels() {
        let kernels = [
            KernelSpec::none(),
            reference_kernel(),
            KernelSpec::exponential(2.0, 0.5, SpatialForm::Stiffness),
            KernelSpec::general(|t, s| (1.0 + t) * (-(t - s)).exp(), SpatialForm::Mass),
            KernelSpec::separable(|d| 1.0 / (1.0 + d), SpatialForm::Stiffness),
        ];
        for (i, kernel) in kernels.into_iter().enumerate() {
            for window in [None, Some((0.25, 0.6))] {
                let ctx = context(24, 20, kernel.clone(), window);
                let err = dot_test(&ctx, 100 + i as u64);
                assert!(err <= 1e-12, "kernel {i} window {window:?}: {err:e}");
            }
        }
        let ctx = context(8, 8, reference_kernel(), None);
        assert!(ctx
            .apply_e_adjoint(&[0.0; 7])
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn e_adjoint_without_memory_is_l_adjoint() {
        let ctx = context(16, 12, KernelSpec::none(), None);
        let mut rng = StdRng::seed_from_u64(15);
        let z = random_vec(ctx.n_dof(), &mut rng);
        let a = ctx.apply_e_adjoint(&z).unwrap();
        let b = ctx.apply_l_adjoint(&z).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    /// Backward Euler on a mode: `k Σ_{m=1}^{N} (1 + kλ)^{-2m}`.
    fn discrete_gramian_mode(lam: f64, k: f64, n: usize) -> f64 {
        let r = 1.0 / (1.0 + k * lam);
        (1..=n).map(|m| k * r.powi(2 * m as i32)).sum()
    }

    #[test]
    fn gramian_on_mode_matches_scalar_recursion() {
        let ctx = context(64, 200, KernelSpec::none(), None);
        let phi = ctx.modes().vector(0).to_vec();
        let lam = ctx.modes().eigenvalue(0);
        let expected = discrete_gramian_mode(lam, ctx.solver().step(), 200);
        let g = ctx.apply_gramian(&phi).unwrap();
        for (a, b) in g.iter().zip(&phi) {
            assert!((a - expected * b).abs() < 1e-12);
        }
        assert!(ctx.apply_gramian(&vec![0.0; 63]).unwrap().iter().all(|&v| v == 0.0));
        let continuum = (1.0 - (-2.0 * PI2).exp()) / (2.0 * PI2);
        // backward Euler shrinks the Gramian by ≈ 1 / (1 + kλ/2)
        assert!((expected / continuum - 1.0).abs() < 0.03);
    }

    #[test]
    fn gramian_symmetric_and_resolvent_coercive() {
        let ctx = context(20, 20, KernelSpec::none(), Some((0.2, 0.7)));
        let mut rng = StdRng::seed_from_u64(16);
        for _ in 0..5 {
            let a = random_vec(ctx.n_dof(), &mut rng);
            let b = random_vec(ctx.n_dof(), &mut rng);
            let lhs = ctx.x_inner(&ctx.apply_gramian(&a).unwrap(), &b);
            let rhs = ctx.x_inner(&a, &ctx.apply_gramian(&b).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
            let delta = 1e-3;
            let q = ctx.x_inner(&ctx.apply_gramian(&a).unwrap(), &a) + delta * ctx.x_inner(&a, &a);
            assert!(q >= delta * ctx.x_inner(&a, &a));
        }
    }

    #[test]
    fn resolvent_cases() {
        let ctx = context(32, 64, KernelSpec::none(), None);
        let zero = ctx.solve_resolvent(0.1, &vec![0.0; 31], 1e-12, 50).unwrap();
        assert!(zero.solution.iter().all(|&v| v == 0.0));

        let mut rng = StdRng::seed_from_u64(17);
        let r = random_vec(31, &mut rng);
        let big = ctx.solve_resolvent(1e6, &r, 1e-12, 50).unwrap();
        for (w, x) in big.solution.iter().zip(&r) {
            assert!((w - x / 1e6).abs() <= 1e-5 * (x / 1e6).abs().max(1e-12));
        }

        let phi = ctx.modes().vector(0).to_vec();
        let lam = ctx.modes().eigenvalue(0);
        let g = discrete_gramian_mode(lam, ctx.solver().step(), 64);
        let delta = 1e-2;
        let w = ctx.solve_resolvent(delta, &phi, 1e-13, 50).unwrap();
        for (a, b) in w.solution.iter().zip(&phi) {
            assert!((a - b / (delta + g)).abs() < 1e-10);
        }

        // residual contract
        let delta = 1e-4;
        let out = ctx.solve_resolvent(delta, &r, 1e-10, 200).unwrap();
        let mut res = ctx.apply_gramian(&out.solution).unwrap();
        crate::linalg::axpy(delta, &out.solution, &mut res);
        let diff: Vec<f64> = res.iter().zip(&r).map(|(a, b)| a - b).collect();
        assert!(ctx.x_norm(&diff) <= 1e-9 * ctx.x_norm(&r));

        assert!(ctx.solve_resolvent(0.0, &r, 1e-10, 10).is_err());
        assert!(matches!(
            ctx.solve_resolvent(1e-8, &r, 1e-15, 2),
            Err(crate::Error::NotConverged { .. })
        ));
    }

    #[test]
    fn resolvent_damping_decreases_with_delta() {
        let ctx = context(64, 40, reference_kernel(), None);
        let z = ctx.z_hat();
        let zn = ctx.x_norm(&z);
        let mut prev = f64::INFINITY;
        for delta in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let w = ctx.solve_resolvent(delta, &z, 1e-12, 200).unwrap();
            let damp = delta * ctx.x_norm(&w.solution);
            assert!(damp <= prev);
            prev = damp;
        }
        assert!(prev < 0.05 * zn);
    }

    #[test]
    fn memory_response_bounded_by_integrated_norm() {
        let mut rng = StdRng::seed_from_u64(18);
        for (kernel, bound) in [
            (reference_kernel(), Some(1.0)),
            (KernelSpec::exponential(1.0, 1.0, SpatialForm::Stiffness), None),
        ] {
            let ctx = context(32, 32, kernel, None);
            let k = ctx.solver().step();
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let y = random_control(&ctx, &mut rng);
                let mut y = y;
                y.level_mut(0).iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                let lhs = ctx.x_norm(&ctx.memory_response(&y).unwrap());
                let integral: f64 = (0..ctx.n_steps()).map(|j| k * ctx.x_norm(y.level(j))).sum();
                worst = worst.max(lhs / integral);
            }
            assert!(worst.is_finite());
            if let Some(b) = bound {
                // contraction of the heat step and |κ| ≤ 1 give C ≤ T
                assert!(worst <= b + 1e-12, "{worst}");
            }
        }
    }
}
