//! Piecewise-linear finite elements on a uniform mesh of (0, 1) with
//! homogeneous Dirichlet conditions, plus the projections used by the
//! Galerkin hierarchy: the L² projection onto the element space, the
//! M-orthogonal projection onto the leading discrete sine modes, and the
//! piecewise-constant-in-time slab projection.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::linalg::{SymTridiagFactor, TridiagMatrix};
use crate::time::Trajectory;

/// Uniform mesh of (0, 1) with `n_cells` cells; unknowns sit at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        let h = 1.0 / n_cells as f64;
        let nodes = (1..n_cells).map(|i| i as f64 / n_cells as f64).collect();
        Ok(Self { n_cells, h, nodes })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_dof(&self) -> usize {
        self.n_cells - 1
    }

    /// Interior node coordinates `x_i = i h`, `i = 1..n_cells`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// All node coordinates including the two boundary nodes.
    pub fn all_nodes(&self) -> Vec<f64> {
        (0..=self.n_cells)
            .map(|i| i as f64 / self.n_cells as f64)
            .collect()
    }
}

pub fn build_grid(n_cells: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(n_cells)
}

/// Mass matrix `(φ_i, φ_j)`: `2h/3` on the diagonal, `h/6` off it.
pub fn assemble_mass(grid: &SpatialGrid) -> TridiagMatrix {
    let n = grid.n_dof();
    let h = grid.h();
    TridiagMatrix {
        diag: vec![2.0 * h / 3.0; n],
        off: vec![h / 6.0; n - 1],
    }
}

/// Stiffness matrix `(φ_i', φ_j')`: `2/h` on the diagonal, `-1/h` off it.
pub fn assemble_stiffness(grid: &SpatialGrid) -> TridiagMatrix {
    let n = grid.n_dof();
    let h = grid.h();
    TridiagMatrix {
        diag: vec![2.0 / h; n],
        off: vec![-1.0 / h; n - 1],
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Load vector `b_i = ∫ f φ_i` by 3-point Gauss quadrature on every cell.
pub fn load_vector<F: Fn(f64) -> f64>(grid: &SpatialGrid, f: F) -> Vec<f64> {
    let n = grid.n_dof();
    let h = grid.h();
    let mut b = vec![0.0; n];
    for cell in 0..grid.n_cells() {
        let left = cell as f64 * h;
        for &(xi, w) in &GAUSS3 {
            let s = 0.5 * (xi + 1.0);
            let x = left + s * h;
            let fw = f(x) * w * 0.5 * h;
            // left node of the cell is interior dof `cell - 1`, right node is dof `cell`
            if cell >= 1 {
                b[cell - 1] += fw * (1.0 - s);
            }
            if cell < n {
                b[cell] += fw * s;
            }
        }
    }
    b
}

/// L² projection onto the element space: solves `M c = b`.
pub fn project_l2<F: Fn(f64) -> f64>(grid: &SpatialGrid, f: F) -> Vec<f64> {
    let mass = assemble_mass(grid);
    let factor = mass.factor().expect("mass matrix is positive definite");
    factor.solve(&load_vector(grid, f))
}

/// Evaluates the element function with coefficients `c` at `x ∈ [0, 1]`.
pub fn evaluate(grid: &SpatialGrid, c: &[f64], x: f64) -> f64 {
    let h = grid.h();
    let n = grid.n_dof();
    let cell = ((x / h).floor() as usize).min(grid.n_cells() - 1);
    let s = x / h - cell as f64;
    let left = if cell >= 1 { c[cell - 1] } else { 0.0 };
    let right = if cell < n { c[cell] } else { 0.0 };
    left * (1.0 - s) + right * s
}

/// Generalized eigenpairs of the pencil (stiffness, mass), ordered by
/// increasing eigenvalue, with M-orthonormal eigenvectors.
///
/// On a uniform mesh both matrices are symmetric Toeplitz, so the pencil is
/// diagonalized by the nodal sine vectors `sin(jπ x_i)` with eigenvalues
/// `6 (1 − cos jπh) / (h² (2 + cos jπh))`.
#[derive(Debug, Clone)]
pub struct DiscreteModes {
    n_dof: usize,
    eigenvalues: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    mass: TridiagMatrix,
}

impl DiscreteModes {
    pub fn new(grid: &SpatialGrid) -> Self {
        let h = grid.h();
        let n = grid.n_dof();
        let mass = assemble_mass(grid);
        let mut eigenvalues = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for j in 1..=n {
            let theta = j as f64 * PI * h;
            eigenvalues.push(6.0 * (1.0 - theta.cos()) / (h * h * (2.0 + theta.cos())));
            let mut v: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&x| (j as f64 * PI * x).sin())
                .collect();
            let norm = mass.quad_form(&v, &v).sqrt();
            v.iter_mut().for_each(|c| *c /= norm);
            vectors.push(v);
        }
        Self {
            n_dof: n,
            eigenvalues,
            vectors,
            mass,
        }
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Eigenvalue of mode `j`, zero-based.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// M-normalized mode `j`, zero-based.
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j]
    }

    /// M-inner products of `v` with each of the first `m` modes.
    pub fn coefficients(&self, m: usize, v: &[f64]) -> Vec<f64> {
        let mv = self.mass.mul(v);
        self.vectors[..m]
            .iter()
            .map(|phi| crate::linalg::dot(phi, &mv))
            .collect()
    }

    /// M-orthogonal projection of `v` onto the span of the first `m` modes.
    pub fn project(&self, m: usize, v: &[f64]) -> Vec<f64> {
        if m >= self.n_dof {
            return v.to_vec();
        }
        let coeffs = self.coefficients(m, v);
        let mut out = vec![0.0; v.len()];
        for (c, phi) in coeffs.iter().zip(&self.vectors) {
            crate::linalg::axpy(*c, phi, &mut out);
        }
        out
    }
}

/// Spatial mode count and time slab count of one Galerkin level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GalerkinLevel {
    pub modes: usize,
    pub slabs: usize,
}

impl GalerkinLevel {
    pub fn new(modes: usize, slabs: usize) -> Self {
        Self { modes, slabs }
    }

    pub fn validate(&self, n_dof: usize, n_steps: usize) -> Result<()> {
        if self.modes == 0 || self.modes > n_dof {
            return Err(Error::InvalidParameter(format!(
                "mode count {} outside 1..={n_dof}",
                self.modes
            )));
        }
        if self.slabs == 0 || self.slabs > n_steps {
            return Err(Error::InvalidParameter(format!(
                "slab count {} outside 1..={n_steps}",
                self.slabs
            )));
        }
        if !n_steps.is_multiple_of(self.slabs) {
            return Err(Error::NotDivisible {
                n_steps,
                slabs: self.slabs,
            });
        }
        Ok(())
    }
}

pub fn project_spatial_modes(
    modes: &DiscreteModes,
    level: &GalerkinLevel,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_len("spatial projection input", modes.n_dof(), v.len())?;
    if level.modes == 0 || level.modes > modes.n_dof() {
        return Err(Error::InvalidParameter(format!(
            "mode count {} outside 1..={}",
            level.modes,
            modes.n_dof()
        )));
    }
    Ok(modes.project(level.modes, v))
}

/// Replaces the control on each slab of `N / slabs` steps by its average.
///
/// Controls act on levels `1..=N`; slab `l` averages levels
/// `(l−1)s+1 ..= l s`. Level 0 is passed through untouched.
pub fn project_time_slabs(level: &GalerkinLevel, u: &Trajectory) -> Result<Trajectory> {
    let n_steps = u.n_steps();
    if level.slabs == 0 || level.slabs > n_steps {
        return Err(Error::InvalidParameter(format!(
            "slab count {} outside 1..={n_steps}",
            level.slabs
        )));
    }
    if !n_steps.is_multiple_of(level.slabs) {
        return Err(Error::NotDivisible {
            n_steps,
            slabs: level.slabs,
        });
    }
    let width = n_steps / level.slabs;
    let n_dof = u.n_dof();
    let mut out = u.clone();
    let mut mean = vec![0.0; n_dof];
    for slab in 0..level.slabs {
        let range = slab * width + 1..=(slab + 1) * width;
        mean.iter_mut().for_each(|m| *m = 0.0);
        for n in range.clone() {
            crate::linalg::axpy(1.0 / width as f64, u.level(n), &mut mean);
        }
        for n in range {
            out.level_mut(n).copy_from_slice(&mean);
        }
    }
    Ok(out)
}

/// Spatial mode projection applied level by level, level 0 untouched.
pub fn project_trajectory_modes(modes: &DiscreteModes, m: usize, u: &Trajectory) -> Trajectory {
    let mut out = u.clone();
    for n in 1..=u.n_steps() {
        let p = modes.project(m, u.level(n));
        out.level_mut(n).copy_from_slice(&p);
    }
    out
}

/// Cached factorization of the mass matrix, used for mass solves.
#[derive(Debug, Clone)]
pub struct MassSolver {
    factor: SymTridiagFactor,
}

impl MassSolver {
    pub fn new(mass: &TridiagMatrix) -> Result<Self> {
        Ok(Self {
            factor: mass.factor()?,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.factor.solve_in_place(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeGrid;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn hat(grid: &SpatialGrid, i: usize, x: f64) -> f64 {
        let xi = grid.nodes()[i];
        (1.0 - (x - xi).abs() / grid.h()).max(0.0)
    }

    fn hat_slope(grid: &SpatialGrid, i: usize, x: f64) -> f64 {
        let xi = grid.nodes()[i];
        let h = grid.h();
        if x > xi - h && x < xi {
            1.0 / h
        } else if x > xi && x < xi + h {
            -1.0 / h
        } else {
            0.0
        }
    }

    // Composite midpoint rule on a mesh 1000x finer than the grid; exact for
    // piecewise-constant integrands and O(h²) otherwise, independent of the
    // element formulas under test.
    fn fine_integral<F: Fn(f64) -> f64>(n_cells: usize, f: F) -> f64 {
        let n = n_cells * 1000;
        let dx = 1.0 / n as f64;
        (0..n).map(|i| f((i as f64 + 0.5) * dx) * dx).sum()
    }

    #[test]
    fn grid_layout() {
        let g = build_grid(2).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.nodes(), &[0.5]);
        assert_eq!(g.n_dof(), 1);
        let g = build_grid(4).unwrap();
        assert_eq!(g.nodes(), &[0.25, 0.5, 0.75]);
        let g = build_grid(64).unwrap();
        assert_eq!(g.h(), 1.0 / 64.0);
        assert_eq!(g.n_dof(), 63);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(build_grid(1).is_err());
        assert!(build_grid(0).is_err());
    }

    #[test]
    fn mass_entries_match_hat_integrals() {
        let g = build_grid(2).unwrap();
        let m = assemble_mass(&g);
        assert!((m.diag[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.off.is_empty());

        let g = build_grid(4).unwrap();
        let m = assemble_mass(&g);
        for i in 0..3 {
            let oracle = fine_integral(4, |x| hat(&g, i, x) * hat(&g, i, x));
            assert!((m.diag[i] - oracle).abs() < 1e-6, "{} vs {oracle}", m.diag[i]);
            assert!((m.diag[i] - 1.0 / 6.0).abs() < 1e-15);
        }
        for i in 0..2 {
            let oracle = fine_integral(4, |x| hat(&g, i, x) * hat(&g, i + 1, x));
            assert!((m.off[i] - oracle).abs() < 1e-6);
            assert!((m.off[i] - 1.0 / 24.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_mass_row_sums_equal_h() {
        let g = build_grid(16).unwrap();
        let m = assemble_mass(&g);
        let ones = vec![1.0; g.n_dof()];
        let rows = m.mul(&ones);
        for r in &rows[1..rows.len() - 1] {
            assert!((r - g.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_entries_match_slope_integrals() {
        let g = build_grid(2).unwrap();
        assert_eq!(assemble_stiffness(&g).diag, vec![4.0]);
        let g = build_grid(4).unwrap();
        let a = assemble_stiffness(&g);
        assert_eq!(a.diag, vec![8.0, 8.0, 8.0]);
        assert_eq!(a.off, vec![-4.0, -4.0]);
        for i in 0..3 {
            let oracle = fine_integral(4, |x| hat_slope(&g, i, x).powi(2));
            assert!((a.diag[i] - oracle).abs() < 1e-9);
        }
        let oracle = fine_integral(4, |x| hat_slope(&g, 0, x) * hat_slope(&g, 1, x));
        assert!((a.off[0] - oracle).abs() < 1e-9);
    }

    #[test]
    fn matrices_are_spd() {
        let mut rng = StdRng::seed_from_u64(7);
        for n_cells in [2, 3, 8, 64] {
            let g = build_grid(n_cells).unwrap();
            for mat in [assemble_mass(&g), assemble_stiffness(&g)] {
                let f = mat.factor().unwrap();
                assert!(f.pivots().iter().all(|&p| p > 0.0));
                for _ in 0..10 {
                    let x: Vec<f64> = (0..g.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    assert!(mat.quad_form(&x, &x) > 0.0);
                }
            }
        }
    }

    #[test]
    fn modes_are_generalized_eigenvectors() {
        let g = build_grid(12).unwrap();
        let modes = DiscreteModes::new(&g);
        let m = assemble_mass(&g);
        let a = assemble_stiffness(&g);
        for j in 0..g.n_dof() {
            let v = modes.vector(j);
            let av = a.mul(v);
            let mv = m.mul(v);
            let lam = modes.eigenvalue(j);
            for (x, y) in av.iter().zip(&mv) {
                assert!((x - lam * y).abs() < 1e-10 * lam);
            }
            for i in 0..g.n_dof() {
                let ip = m.quad_form(v, modes.vector(i));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12);
            }
        }
        assert!(modes.eigenvalues().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn smallest_eigenvalue_approaches_pi_squared() {
        let g = build_grid(64).unwrap();
        let lam = DiscreteModes::new(&g).eigenvalue(0);
        assert!((lam / (PI * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn l2_projection_cases() {
        let g = build_grid(64).unwrap();
        assert!(project_l2(&g, |_| 0.0).iter().all(|&c| c == 0.0));

        let j = 10;
        let c = project_l2(&g, |x| hat(&g, j, x));
        for (i, v) in c.iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }

        let c = project_l2(&g, |x| (PI * x).sin());
        for (v, x) in c.iter().zip(g.nodes()) {
            assert!((v - (PI * x).sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn l2_projection_reproduces_element_functions() {
        let g = build_grid(9).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let coeffs: Vec<f64> = (0..g.n_dof()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let c = project_l2(&g, |x| evaluate(&g, &coeffs, x));
        for (a, b) in c.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_projection_cases() {
        let g = build_grid(16).unwrap();
        let modes = DiscreteModes::new(&g);
        let m = assemble_mass(&g);
        let mut rng = StdRng::seed_from_u64(11);
        let v: Vec<f64> = (0..g.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();

        let full = GalerkinLevel::new(g.n_dof(), 1);
        assert_eq!(project_spatial_modes(&modes, &full, &v).unwrap(), v);

        let one = GalerkinLevel::new(1, 1);
        let p = project_spatial_modes(&modes, &one, modes.vector(0)).unwrap();
        for (a, b) in p.iter().zip(modes.vector(0)) {
            assert!((a - b).abs() < 1e-12);
        }

        let lvl = GalerkinLevel::new(5, 1);
        let p1 = project_spatial_modes(&modes, &lvl, &v).unwrap();
        let p2 = project_spatial_modes(&modes, &lvl, &p1).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
        let w: Vec<f64> = (0..g.n_dof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pw = project_spatial_modes(&modes, &lvl, &w).unwrap();
        let resid: Vec<f64> = w.iter().zip(&pw).map(|(a, b)| a - b).collect();
        assert!(m.quad_form(&p1, &resid).abs() < 1e-12);

        assert!(project_spatial_modes(&modes, &GalerkinLevel::new(0, 1), &v).is_err());
    }

    #[test]
    fn time_slab_cases() {
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let u = Trajectory::from_fn(&tg, 1, |n, _| vec![n as f64]).unwrap();
        let p = project_time_slabs(&GalerkinLevel::new(1, 2), &u).unwrap();
        let vals: Vec<f64> = (1..=4).map(|n| p.level(n)[0]).collect();
        assert_eq!(vals, vec![1.5, 1.5, 3.5, 3.5]);

        let same = project_time_slabs(&GalerkinLevel::new(1, 4), &u).unwrap();
        assert_eq!(same, u);

        let c = Trajectory::from_fn(&tg, 2, |_, _| vec![0.3, -1.0]).unwrap();
        assert_eq!(project_time_slabs(&GalerkinLevel::new(1, 1), &c).unwrap(), c);

        assert!(matches!(
            project_time_slabs(&GalerkinLevel::new(1, 3), &u),
            Err(Error::NotDivisible { n_steps: 4, slabs: 3 })
        ));
    }

    #[test]
    fn time_slabs_idempotent_orthogonal_mean_preserving() {
        let tg = TimeGrid::new(1.0, 12).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let u = Trajectory::from_fn(&tg, 3, |_, _| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let w = Trajectory::from_fn(&tg, 3, |_, _| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let lvl = GalerkinLevel::new(1, 3);
        let p = project_time_slabs(&lvl, &u).unwrap();
        let pp = project_time_slabs(&lvl, &p).unwrap();
        for (a, b) in p.as_slice().iter().zip(pp.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        let pw = project_time_slabs(&lvl, &w).unwrap();
        let ip: f64 = (1..=12)
            .map(|n| {
                p.level(n)
                    .iter()
                    .zip(w.level(n).iter().zip(pw.level(n)))
                    .map(|(a, (b, c))| a * (b - c))
                    .sum::<f64>()
            })
            .sum();
        assert!(ip.abs() < 1e-12);
        for d in 0..3 {
            let s0: f64 = (1..=12).map(|n| u.level(n)[d]).sum();
            let s1: f64 = (1..=12).map(|n| p.level(n)[d]).sum();
            assert!((s0 - s1).abs() < 1e-12);
        }
    }
}
