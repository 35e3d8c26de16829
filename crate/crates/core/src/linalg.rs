//! Small dense-free linear algebra: symmetric tridiagonal matrices, their
//! LDLᵀ factorization, and a matrix-free conjugate gradient solver over an
//! arbitrary inner product.

use crate::error::{check_len, Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagMatrix {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TridiagMatrix {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty tridiagonal matrix".into()));
        }
        check_len("tridiagonal off-diagonal", diag.len() - 1, off.len())?;
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Computes `out = self * x`.
    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mul_into(x, &mut out);
        out
    }

    /// Adds `alpha * self * x` to `out`.
    pub fn mul_add_into(&self, alpha: f64, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] += alpha * acc;
        }
    }

    /// Returns `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &TridiagMatrix) -> TridiagMatrix {
        TridiagMatrix {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a + alpha * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    /// `xᵀ A y`.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = self.diag[i] * y[i];
            if i > 0 {
                row += self.off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                row += self.off[i] * y[i + 1];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// LDLᵀ factorization; fails unless the matrix is positive definite.
    pub fn factor(&self) -> Result<SymTridiagFactor> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = self.diag[0];
        for i in 1..n {
            if d[i - 1] <= 0.0 || !d[i - 1].is_finite() {
                return Err(Error::InvalidParameter(
                    "matrix is not positive definite".into(),
                ));
            }
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - l[i - 1] * self.off[i - 1];
        }
        if d[n - 1] <= 0.0 || !d[n - 1].is_finite() {
            return Err(Error::InvalidParameter(
                "matrix is not positive definite".into(),
            ));
        }
        Ok(SymTridiagFactor { d, l })
    }
}

/// `A = L D Lᵀ` with unit lower bidiagonal `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl SymTridiagFactor {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 1..n {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        for (bi, di) in b.iter_mut().zip(&self.d) {
            *bi /= di;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            b[i] -= self.l[i] * b[i + 1];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Result of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final recursive residual norm relative to the right-hand side.
    pub relative_residual: f64,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Matrix-free conjugate gradients from a zero initial guess.
///
/// `apply` must be self-adjoint and positive definite with respect to `inner`.
/// Stops once `‖r‖ ≤ tol ‖b‖` in the norm induced by `inner`.
pub fn conjugate_gradient<A, I>(
    mut apply: A,
    inner: I,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    solver: &'static str,
) -> Result<CgOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    I: Fn(&[f64], &[f64]) -> f64,
{
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let b_norm = inner(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            history: vec![0.0],
        });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    let mut history = vec![1.0];

    for it in 1..=max_iter {
        let ap = apply(&p)?;
        let pap = inner(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                solver,
                iterations: it,
                residual: rr.sqrt() / b_norm,
                history,
            });
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = inner(&r, &r);
        let rel = rr_new.sqrt() / b_norm;
        history.push(rel);
        if rel <= tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
                history,
            });
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(Error::NotConverged {
        solver,
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
        history,
    })
}
