//! Restarted GMRES on flat `f64` vectors, and closed-form condition numbers
//! for the per-step operator.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    /// Relative residual tolerance, measured against `||rhs||`.
    pub tol: f64,
    /// Krylov subspace size per restart cycle.
    pub restart: usize,
    /// Cap on the total number of Arnoldi steps.
    pub max_iters: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            tol: 1e-11,
            restart: 30,
            max_iters: 500,
        }
    }
}

impl KrylovConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tol > 0.0) {
            out.push("krylov.tol must be > 0".to_string());
        }
        if self.restart == 0 {
            out.push("krylov.restart must be >= 1".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Arnoldi steps (operator applications inside the Krylov loop).
    pub iterations: usize,
    /// True residual `||A x - b||` of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
    /// Least-squares residual estimate after every Arnoldi step.
    pub residual_history: Vec<f64>,
}

/// A square linear map on `R^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(op: &dyn LinearOperator, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Below this `||rhs||` the stopping test switches to an absolute tolerance.
const TINY_RHS: f64 = 1e-300;

/// GMRES(restart) with modified Gram-Schmidt Arnoldi and Givens rotations.
///
/// Returns the final iterate even when the iteration cap is hit; check
/// `report.converged`.
pub fn gmres_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    x0: &[f64],
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = op.dim();
    if rhs.len() != n || x0.len() != n {
        return Err(Error::GridMismatch(format!(
            "operator dimension {n}, rhs {}, initial guess {}",
            rhs.len(),
            x0.len()
        )));
    }
    let b_norm = norm(rhs);
    let target = if b_norm < TINY_RHS { cfg.tol } else { cfg.tol * b_norm };
    let m = cfg.restart.max(1);

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    let mut r_norm = residual(op, &x, rhs, &mut r);
    // Krylov basis, Hessenberg columns, rotations.
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    while r_norm > target && iterations < cfg.max_iters {
        v.clear();
        h.clear();
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = r_norm;
        v.push(r.iter().map(|ri| ri / r_norm).collect());

        let mut k = 0;
        while k < m && iterations < cfg.max_iters {
            op.apply(&v[k], &mut w);
            iterations += 1;

            // Modified Gram-Schmidt with one reorthogonalization pass.
            let mut col = vec![0.0; k + 2];
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    col[i] += hij;
                    for (wj, vij) in w.iter_mut().zip(vi) {
                        *wj -= hij * vij;
                    }
                }
            }
            let h_next = norm(&w);
            col[k + 1] = h_next;

            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = col[k] / denom;
                sn[k] = col[k + 1] / denom;
            }
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            h.push(col);
            k += 1;

            let estimate = g[k].abs();
            history.push(estimate);
            let breakdown = h_next <= f64::EPSILON * denom.max(f64::MIN_POSITIVE) || h_next == 0.0;
            if estimate <= target || breakdown {
                break;
            }
            v.push(w.iter().map(|wi| wi / h_next).collect());
        }

        // Back substitution for the k x k triangular system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vji) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vji;
            }
        }
        let prev = r_norm;
        r_norm = residual(op, &x, rhs, &mut r);
        if k == 0 || !(r_norm < prev) && r_norm > target {
            // No progress possible from this cycle.
            break;
        }
    }

    let converged = r_norm <= target;
    Ok((
        x,
        SolveReport {
            iterations,
            final_residual: r_norm,
            converged,
            residual_history: history,
        },
    ))
}

/// Closed-form condition number `sqrt(1 + lambda_max^2)` of
/// `I + m x S` with `m = e1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEstimate {
    pub kappa: f64,
    pub lambda_max: f64,
}

impl ConditionEstimate {
    pub fn from_lambda(lambda_max: f64) -> Self {
        ConditionEstimate {
            kappa: (1.0 + lambda_max * lambda_max).sqrt(),
            lambda_max,
        }
    }
}

/// `kappa = sqrt(1 + (4 eps dt / dx^2 + alpha (1 + 2 eta / dt))^2)`
pub fn condition_number_1d(epsilon: f64, dt: f64, dx: f64, alpha: f64, eta: f64) -> ConditionEstimate {
    ConditionEstimate::from_lambda(4.0 * epsilon * dt / (dx * dx) + alpha * (1.0 + 2.0 * eta / dt))
}

/// Three-dimensional analogue of [`condition_number_1d`].
pub fn condition_number_3d(
    epsilon: f64,
    dt: f64,
    dx: f64,
    dy: f64,
    dz: f64,
    alpha: f64,
    eta: f64,
) -> ConditionEstimate {
    let stiffness = 1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz);
    ConditionEstimate::from_lambda(4.0 * epsilon * dt * stiffness + alpha * (1.0 + 2.0 * eta / dt))
}

/// Largest eigenvalue magnitude of the cell-centred Neumann second
/// difference on `n` cells of width `h`: `4/h^2 sin^2((n-1) pi / (2n))`.
pub fn neumann_lambda_max(n: usize, h: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let s = ((n - 1) as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin();
    4.0 * s * s / (h * h)
}

/// Condition number of the per-step operator with `m = e1` on `grid`, using
/// the exact extreme Laplacian eigenvalue per axis. Tends to
/// [`condition_number_3d`] as the grid is refined.
pub fn condition_number_on_grid(epsilon: f64, dt: f64, grid: &Grid, alpha: f64, eta: f64) -> ConditionEstimate {
    let lap = neumann_lambda_max(grid.nx, grid.dx) + neumann_lambda_max(grid.ny, grid.dy) + neumann_lambda_max(grid.nz, grid.dz);
    ConditionEstimate::from_lambda(epsilon * dt * lap + alpha * (1.0 + 2.0 * eta / dt))
}
