//! Brute-force oracles backing the verification suite and the derived test
//! values: dense operator assembly on tiny problems, high-resolution sphere
//! quadrature, and log-log scaling fits.
//!
//! Oracles deliberately avoid the production kernels they check: the dense
//! matrix is built column-by-column from unit vectors, the quadrature rules
//! evaluate integrands pointwise, and the fit is plain least squares. Size
//! guards are hard-coded; these paths are for verification scale only.

use crate::mesh::TriMesh;
use crate::quad;
use crate::sphere::{Direction, SpherePatch};
use crate::transport::{Dir, TransportOp};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense assembly refused: {elements} elements / {dim} unknowns exceed the guard (20 elements, 3000 unknowns)")]
    TooLarge { elements: usize, dim: usize },
}

/// Explicit matrix of the discrete operator, one application per unit
/// vector. Refuses anything beyond verification scale.
pub fn dense_assemble<O: TransportOp>(
    op: &O,
    mesh: &TriMesh,
    dir: Dir,
) -> Result<DMatrix<f64>, OracleError> {
    let dim = op.dim();
    if mesh.triangles.len() > 20 || dim > 3000 {
        return Err(OracleError::TooLarge { elements: mesh.triangles.len(), dim });
    }
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        op.apply(&e, dir, &mut col);
        e[j] = 0.0;
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Whole-sphere integral at `multiplier` times the band-limit resolution for
/// degree `order` integrands.
pub fn quad_oracle(f: impl Fn(&Direction) -> f64, order: u32, multiplier: usize) -> f64 {
    let n_mu = ((order + 2) as usize) * multiplier;
    let n_phi = ((4 * order + 5) as usize) * multiplier;
    quad::sphere_product(f, n_mu, n_phi)
}

/// Patch-restricted integral with a dense tensor rule in (phi, theta).
pub fn quad_patch_oracle(f: impl Fn(&Direction) -> f64, patch: &SpherePatch, points: usize) -> f64 {
    quad::patch_product(f, patch, points, points)
}

/// Least-squares slope of log(time) against log(size).
pub fn scaling_fit(sizes: &[f64], times: &[f64]) -> f64 {
    assert_eq!(sizes.len(), times.len());
    assert!(sizes.len() >= 2);
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::FOUR_PI;

    #[test]
    fn sphere_measure_and_orthonormality() {
        assert!((quad_oracle(|_| 1.0, 0, 10) - FOUR_PI).abs() < 1e-12);
        let y10 = |d: &Direction| {
            crate::harmonics::eval_y(crate::harmonics::HarmonicIndex { l: 1, m: 0 }, d).unwrap()
        };
        assert!((quad_oracle(|d| y10(d) * y10(d), 2, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn octant_moment() {
        let p = crate::sphere::base_octants()[0];
        let v = quad_patch_oracle(|d| d.mu, &p, 30);
        assert!((v - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_recovers_exponents() {
        let sizes: Vec<f64> = (3..10).map(|k| (1 << k) as f64).collect();
        let linear: Vec<f64> = sizes.iter().map(|s| 3.0 * s).collect();
        assert!((scaling_fit(&sizes, &linear) - 1.0).abs() < 1e-6);
        let quadratic: Vec<f64> = sizes.iter().map(|s| 0.5 * s * s).collect();
        assert!((scaling_fit(&sizes, &quadratic) - 2.0).abs() < 1e-6);
    }
}
