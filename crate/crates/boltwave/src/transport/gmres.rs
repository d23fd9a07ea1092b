//! Restarted GMRES with right preconditioning, matrix-free.
//!
//! Right preconditioning keeps the iteration's residual equal to the true
//! residual, so convergence is declared directly against
//! `max(abs_tol, rel_tol * ||rhs||)`. Everything is sequential and
//! deterministic.

use super::{Dir, SolveOptions, TransportOp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations; residual {residual:.3e} > target {target:.3e}")]
    NoConvergence { iterations: usize, residual: f64, target: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `A x = rhs` (or `A^T x = rhs` for the adjoint direction).
pub fn solve<O: TransportOp>(
    op: &O,
    rhs: &[f64],
    dir: Dir,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    let n = op.dim();
    assert_eq!(rhs.len(), n);
    let target = opts.abs_tol.max(opts.rel_tol * norm(rhs));
    let m = opts.restart.max(1);

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut iterations = 0usize;
    let mut res_norm = norm(&r);
    if res_norm <= target {
        return Ok((x, SolveStats { iterations: 0, residual: res_norm }));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut scratch = vec![0.0; n];
    let mut combo = vec![0.0; n];
    let mut precond = vec![0.0; n];

    while iterations < opts.max_iterations {
        basis.clear();
        let beta = res_norm;
        basis.push(r.iter().map(|v| v / beta).collect());

        // Hessenberg in compact column form plus Givens rotations.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for j in 0..m {
            if iterations >= opts.max_iterations {
                break;
            }
            iterations += 1;
            op.precondition(&basis[j], &mut precond);
            op.apply(&precond, dir, &mut scratch);

            let mut col = vec![0.0; j + 2];
            for (i, b) in basis.iter().enumerate() {
                let dot: f64 = scratch.iter().zip(b).map(|(a, c)| a * c).sum();
                col[i] = dot;
                for (s, c) in scratch.iter_mut().zip(b) {
                    *s -= dot * c;
                }
            }
            let hn = norm(&scratch);
            col[j + 1] = hn;

            // Apply accumulated rotations to the new column.
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = {
                let (a, b) = (col[j], col[j + 1]);
                let r = (a * a + b * b).sqrt();
                if r == 0.0 {
                    (1.0, 0.0)
                } else {
                    (a / r, b / r)
                }
            };
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            let gj = g[j];
            g[j] = c * gj;
            g[j + 1] = -s * gj;
            cs.push(c);
            sn.push(s);
            h.push(col);
            k_used = j + 1;

            if hn <= f64::EPSILON * beta {
                break; // happy breakdown: exact solution in this subspace
            }
            if g[j + 1].abs() <= target {
                break;
            }
            if j + 1 < m {
                basis.push(scratch.iter().map(|v| v / hn).collect());
            }
        }

        // Back-substitute the triangularised least-squares system.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k_used {
                acc -= h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        // x += M^{-1} (V y).
        combo.fill(0.0);
        for (j, yj) in y.iter().enumerate() {
            for (s, b) in combo.iter_mut().zip(&basis[j]) {
                *s += yj * b;
            }
        }
        op.precondition(&combo, &mut precond);
        for (xi, p) in x.iter_mut().zip(&precond) {
            *xi += p;
        }

        // True residual for the restart/convergence decision.
        op.apply(&x, dir, &mut scratch);
        for ((ri, b), s) in r.iter_mut().zip(rhs).zip(&scratch) {
            *ri = b - s;
        }
        res_norm = norm(&r);
        if res_norm <= target {
            return Ok((x, SolveStats { iterations, residual: res_norm }));
        }
    }
    Err(SolveError::NoConvergence { iterations, residual: res_norm, target })
}
