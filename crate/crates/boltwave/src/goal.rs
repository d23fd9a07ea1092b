//! Reduced-accuracy residuals, the dual-weighted error metric, the scalar
//! error estimate and effectivity indices.
//!
//! The reduced residual is a single diagonal matrix-vector product with
//! sources zeroed: cheap, non-zero, and free of Galerkin orthogonality, which
//! is exactly what a one-pass refinement indicator needs. The metric weights
//! forward/adjoint products by `N_DOF / tau` so entries compare against 1.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GoalError {
    #[error("target error tau must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("field length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// One non-negative entry per active space-angle coefficient, plus the
/// normalisation scalars it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub values: Vec<f64>,
    pub ndof: usize,
    pub tau: f64,
}

/// `diag(A) * field` with sources set to zero. The operator diagonal is
/// direction-independent (transposition preserves it), so forward and adjoint
/// reduced residuals use the same diagonal against the respective fields.
pub fn reduced_residual(diag: &[f64], field: &[f64]) -> Vec<f64> {
    assert_eq!(diag.len(), field.len());
    diag.iter().zip(field).map(|(d, f)| d * f).collect()
}

/// Dual-weighted metric: per coefficient
/// `max(|psi . rhat_star|, |psi_star . rhat|) * ndof / tau`.
pub fn error_metric(
    psi: &[f64],
    psi_star: &[f64],
    rhat: &[f64],
    rhat_star: &[f64],
    ndof: usize,
    tau: f64,
) -> Result<MetricField, GoalError> {
    if tau <= 0.0 {
        return Err(GoalError::NonPositiveTau(tau));
    }
    let n = psi.len();
    for len in [psi_star.len(), rhat.len(), rhat_star.len()] {
        if len != n {
            return Err(GoalError::LengthMismatch(n, len));
        }
    }
    let scale = ndof as f64 / tau;
    let values = (0..n)
        .map(|i| (psi[i] * rhat_star[i]).abs().max((psi_star[i] * rhat[i]).abs()) * scale)
        .collect();
    Ok(MetricField { values, ndof, tau })
}

/// Scalar functional-error estimate: the coefficient sum of
/// `eps (.) rhat_other` (forward form `psi . rhat_star`, adjoint form
/// `psi_star . rhat`).
pub fn error_estimate(eps: &[f64], rhat_other: &[f64]) -> f64 {
    assert_eq!(eps.len(), rhat_other.len());
    eps.iter().zip(rhat_other).map(|(a, b)| a * b).sum()
}

/// `|estimate| / |true_error|`; undefined (None) when the true error sits
/// below the floor instead of overflowing to infinity.
pub fn effectivity_index(estimate: f64, true_error: f64) -> Option<f64> {
    if true_error.abs() < 1e-300 {
        None
    } else {
        Some(estimate.abs() / true_error.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::AngleMap;
    use crate::mesh::{generate_rect, Material};
    use crate::oracle::dense_assemble;
    use crate::sphere::PatchId;
    use crate::transport::{Dir, HaarOperator, TransportOp};

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    #[test]
    fn zero_field_zero_residual() {
        let diag = vec![2.0, 3.0, -1.0];
        let r = reduced_residual(&diag, &[0.0, 0.0, 0.0]);
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_coefficient_reads_dense_diagonal() {
        let mesh = generate_rect(1.0, 0.5, 0.51, Material { sigma_t: 1.5, sigma_s: 0.5, source: 0.0 }).unwrap();
        let maps: Vec<AngleMap> = (0..3 * mesh.triangles.len())
            .map(|n| {
                let mut m = AngleMap::h1(3);
                m.refine(&[PatchId::octant((n % 8) as u8)]);
                m
            })
            .collect();
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let dense = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let diag = op.diagonal();
        for j in [0usize, 5, op.dim() / 2, op.dim() - 1] {
            let mut e = vec![0.0; op.dim()];
            e[j] = 1.0;
            let r = reduced_residual(&diag, &e);
            assert!((r[j] - dense[(j, j)]).abs() < 1e-12);
            assert!(r.iter().enumerate().all(|(i, &v)| i == j || v == 0.0));
        }
    }

    #[test]
    fn residual_is_linear() {
        let mut s = 3u64;
        let n = 64;
        let diag: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let a: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let b: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.5 * x + 0.5 * y).collect();
        let ra = reduced_residual(&diag, &a);
        let rb = reduced_residual(&diag, &b);
        let rc = reduced_residual(&diag, &combo);
        for ((x, y), z) in ra.iter().zip(&rb).zip(&rc) {
            assert!((2.5 * x + 0.5 * y - z).abs() < 1e-13);
        }
    }

    #[test]
    fn metric_arithmetic() {
        let e = error_metric(&[2.0], &[1.0], &[4.0], &[3.0], 10, 0.5).unwrap();
        assert_eq!(e.values, vec![120.0]);
    }

    #[test]
    fn metric_is_symmetric_under_pair_swap() {
        let mut s = 7u64;
        let n = 32;
        let psi: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let psi_star: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let rhat: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let rhat_star: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let a = error_metric(&psi, &psi_star, &rhat, &rhat_star, 100, 0.1).unwrap();
        let b = error_metric(&psi_star, &psi, &rhat_star, &rhat, 100, 0.1).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn metric_sign_flip_invariance_and_scaling() {
        let mut s = 13u64;
        let n = 16;
        let psi: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let psi_star: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let rhat: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let rhat_star: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let base = error_metric(&psi, &psi_star, &rhat, &rhat_star, 50, 0.2).unwrap();
        let flipped: Vec<f64> = psi.iter().map(|v| -v).collect();
        let flipped_star: Vec<f64> = psi_star.iter().map(|v| -v).collect();
        let frhat = reduced_residual(&vec![-1.0; n], &rhat);
        let frhat_star = reduced_residual(&vec![-1.0; n], &rhat_star);
        let flip = error_metric(&flipped, &flipped_star, &frhat, &frhat_star, 50, 0.2).unwrap();
        for (a, b) in base.values.iter().zip(&flip.values) {
            assert!((a - b).abs() < 1e-13);
        }
        // Linear in ndof, inverse in tau (exact arithmetic).
        let double_n = error_metric(&psi, &psi_star, &rhat, &rhat_star, 100, 0.2).unwrap();
        let half_tau = error_metric(&psi, &psi_star, &rhat, &rhat_star, 50, 0.1).unwrap();
        for ((a, b), c) in base.values.iter().zip(&double_n.values).zip(&half_tau.values) {
            assert!((2.0 * a - b).abs() < 1e-12 * a.abs().max(1.0));
            assert!((2.0 * a - c).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn metric_zero_where_both_solutions_vanish() {
        // The failure mode of the plain metric: nothing can trigger where
        // forward and adjoint are both zero.
        let psi = vec![0.0, 1.0, 0.0];
        let psi_star = vec![0.0, 0.0, 2.0];
        let diag = vec![3.0, 3.0, 3.0];
        let rhat = reduced_residual(&diag, &psi);
        let rhat_star = reduced_residual(&diag, &psi_star);
        let e = error_metric(&psi, &psi_star, &rhat, &rhat_star, 10, 1.0).unwrap();
        assert_eq!(e.values[0], 0.0);
        assert!(e.values[1] == 0.0); // psi nonzero but rhat_star zero there
        assert!(e.values[2] == 0.0);
    }

    #[test]
    fn rejects_bad_tau() {
        assert_eq!(
            error_metric(&[1.0], &[1.0], &[1.0], &[1.0], 1, 0.0),
            Err(GoalError::NonPositiveTau(0.0))
        );
        assert!(error_metric(&[1.0], &[1.0], &[1.0], &[1.0], 1, -2.0).is_err());
    }

    #[test]
    fn estimate_zero_and_bilinear() {
        assert_eq!(error_estimate(&[0.0; 4], &[0.0; 4]), 0.0);
        let mut s = 17u64;
        let n = 24;
        let a: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let b: Vec<f64> = (0..n).map(|_| splitmix(&mut s)).collect();
        let base = error_estimate(&a, &b);
        let a3: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let b2: Vec<f64> = b.iter().map(|v| -2.0 * v).collect();
        assert!((error_estimate(&a3, &b) - 3.0 * base).abs() < 1e-12 * base.abs().max(1.0));
        assert!((error_estimate(&a, &b2) + 2.0 * base).abs() < 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn estimate_matches_dense_algebra() {
        let mesh = generate_rect(1.0, 0.5, 0.51, Material { sigma_t: 1.0, sigma_s: 0.25, source: 0.0 }).unwrap();
        let maps: Vec<AngleMap> = (0..3 * mesh.triangles.len()).map(|_| AngleMap::uniform(1, 3)).collect();
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let dense = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let mut s = 19u64;
        let psi: Vec<f64> = (0..op.dim()).map(|_| splitmix(&mut s)).collect();
        let psi_star: Vec<f64> = (0..op.dim()).map(|_| splitmix(&mut s)).collect();
        let diag = op.diagonal();
        let rhat_star = reduced_residual(&diag, &psi_star);
        let fast = error_estimate(&psi, &rhat_star);
        // Independent dense evaluation: psi^T diag(dense) psi_star.
        let slow: f64 = (0..op.dim()).map(|i| psi[i] * dense[(i, i)] * psi_star[i]).sum();
        assert!((fast - slow).abs() < 1e-12 * slow.abs().max(1.0));
    }

    #[test]
    fn effectivity_basics() {
        assert_eq!(effectivity_index(0.5, 0.5), Some(1.0));
        assert_eq!(effectivity_index(-0.5, 0.5), Some(1.0));
        assert_eq!(effectivity_index(1.0, 0.0), None);
        assert_eq!(effectivity_index(1.0, 1e-301), None);
        assert_eq!(effectivity_index(3.0, -1.5), Some(2.0));
    }
}
