//! Projection of filtered-harmonics coefficient fields into adaptive Haar
//! angle maps, plus scalar-flux extraction from either representation.
//!
//! The projection is the L2 projection onto the piecewise-constant leaf
//! space: each effective leaf receives the exact mean of the harmonic
//! expansion over the patch. Patch integrals of `Y_{l,m}` factor into a
//! closed-form azimuthal part and a polar part `int P_l^m(mu) dmu` evaluated
//! by recurrence, so the projection conserves angular moments to roundoff
//! and costs O((N+1)^2) per leaf.

use crate::haar::{AngleMap, HaarError};
use crate::sphere::{SpherePatch, FOUR_PI};

/// Integrals `int_a^b P_l^m(x) dx` (unnormalised associated Legendre, no
/// Condon-Shortley phase) for all `0 <= m <= l <= order`, triangular layout
/// `l(l+1)/2 + m`.
fn legendre_integral_table(order: u32, a: f64, b: f64, out: &mut [f64]) {
    let n = order as usize;
    let tri = |l: usize, m: usize| -> usize { l * (l + 1) / 2 + m };
    debug_assert_eq!(out.len(), (n + 1) * (n + 2) / 2);

    let sa = (1.0 - a * a).max(0.0).sqrt();
    let sb = (1.0 - b * b).max(0.0).sqrt();

    // I_m = int (1-x^2)^{m/2} dx via the power reduction
    // (m+1) I_m = [x s^m] + m I_{m-2}.
    let mut i_pow = vec![0.0; n + 3];
    i_pow[0] = b - a;
    if n + 2 >= 1 {
        let g = |x: f64, s: f64| 0.5 * (x * s + x.clamp(-1.0, 1.0).asin());
        i_pow[1] = g(b, sb) - g(a, sa);
    }
    for m in 2..=(n + 2) {
        let boundary = b * sb.powi(m as i32) - a * sa.powi(m as i32);
        i_pow[m] = (boundary + m as f64 * i_pow[m - 2]) / (m as f64 + 1.0);
    }

    // Unnormalised P_l^m values at the endpoints, for the boundary terms.
    let pval = |x: f64, s: f64| -> Vec<f64> {
        let mut p = vec![0.0; (n + 1) * (n + 2) / 2];
        p[0] = 1.0;
        for m in 1..=n {
            p[tri(m, m)] = (2.0 * m as f64 - 1.0) * s * p[tri(m - 1, m - 1)];
        }
        for m in 0..n {
            p[tri(m + 1, m)] = x * (2.0 * m as f64 + 1.0) * p[tri(m, m)];
        }
        for m in 0..=n {
            for l in (m + 2)..=n {
                let (lf, mf) = (l as f64, m as f64);
                p[tri(l, m)] = (x * (2.0 * lf - 1.0) * p[tri(l - 1, m)]
                    - (lf + mf - 1.0) * p[tri(l - 2, m)])
                    / (lf - mf);
            }
        }
        p
    };
    let pa = pval(a, sa);
    let pb = pval(b, sb);

    // Double factorial (2m-1)!!.
    let mut dfact = vec![1.0; n + 1];
    for m in 1..=n {
        dfact[m] = dfact[m - 1] * (2.0 * m as f64 - 1.0);
    }

    for m in 0..=n {
        let mf = m as f64;
        // K_m^m.
        out[tri(m, m)] = dfact[m] * i_pow[m];
        if m + 1 <= n {
            // K_{m+1}^m from int x s^m dx = -s^{m+2}/(m+2).
            let boundary = -(sb.powi(m as i32 + 2) - sa.powi(m as i32 + 2)) / (mf + 2.0);
            out[tri(m + 1, m)] = (2.0 * mf + 1.0) * dfact[m] * boundary;
        }
        for l in (m + 1)..n {
            let lf = l as f64;
            // L_l = int x P_l^m dx from the derivative identity.
            let bterm = (1.0 - b * b) * pb[tri(l, m)] - (1.0 - a * a) * pa[tri(l, m)];
            let l_l = ((lf + mf) * out[tri(l - 1, m)] - bterm) / (lf + 2.0);
            out[tri(l + 1, m)] =
                ((2.0 * lf + 1.0) * l_l - (lf + mf) * out[tri(l - 1, m)]) / (lf - mf + 1.0);
        }
    }
}

/// Orthonormalisation constants `sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)`,
/// triangular layout.
fn norm_table(order: u32) -> Vec<f64> {
    let n = order as usize;
    let mut out = vec![0.0; (n + 1) * (n + 2) / 2];
    for l in 0..=n {
        for m in 0..=l {
            let mut ratio = 1.0f64;
            for k in (l - m + 1)..=(l + m) {
                ratio /= k as f64;
            }
            out[l * (l + 1) / 2 + m] = ((2.0 * l as f64 + 1.0) / FOUR_PI * ratio).sqrt();
        }
    }
    out
}

/// Exact integral of every harmonic up to `order` over one patch, flat
/// harmonic layout `l^2 + l + m`.
pub fn patch_harmonic_integrals(order: u32, patch: &SpherePatch, out: &mut [f64]) {
    let n = order as usize;
    debug_assert_eq!(out.len(), (n + 1) * (n + 1));
    let tri = |l: usize, m: usize| -> usize { l * (l + 1) / 2 + m };
    let mut ktab = vec![0.0; (n + 1) * (n + 2) / 2];
    legendre_integral_table(order, patch.mu_lo, patch.mu_hi, &mut ktab);
    let norms = norm_table(order);
    let sqrt2 = std::f64::consts::SQRT_2;

    // Azimuthal factors: m = 0 -> width; cos branch -> [sin(m phi)/m];
    // sin branch -> [-cos(m phi)/m].
    let width = patch.phi_hi - patch.phi_lo;
    for l in 0..=n {
        let base = l * l + l;
        for m in 0..=l {
            let radial = norms[tri(l, m)] * ktab[tri(l, m)];
            if m == 0 {
                out[base] = radial * width;
            } else {
                let mf = m as f64;
                let cos_part = ((mf * patch.phi_hi).sin() - (mf * patch.phi_lo).sin()) / mf;
                let sin_part = (-(mf * patch.phi_hi).cos() + (mf * patch.phi_lo).cos()) / mf;
                out[base + m] = sqrt2 * radial * cos_part;
                out[base - m] = sqrt2 * radial * sin_part;
            }
        }
    }
}

/// Mean of the harmonic expansion over every effective leaf of `map`, in
/// canonical leaf order.
pub fn fpn_to_leafmeans(coeffs: &[f64], order: u32, map: &AngleMap) -> Vec<f64> {
    let dim = ((order + 1) * (order + 1)) as usize;
    assert_eq!(coeffs.len(), dim, "coefficient block must be (N+1)^2");
    let patches = map.leaf_patches();
    let mut integrals = vec![0.0; dim];
    let mut out = Vec::with_capacity(patches.len());
    for p in &patches {
        patch_harmonic_integrals(order, p, &mut integrals);
        let total: f64 = coeffs.iter().zip(&integrals).map(|(c, i)| c * i).sum();
        out.push(total / p.area());
    }
    out
}

/// Project a harmonic coefficient block onto the Haar map: leaf means
/// followed by the forward Mallat transform on the same tree.
pub fn fpn_to_anglemap(coeffs: &[f64], order: u32, tree: &AngleMap) -> Result<AngleMap, HaarError> {
    let means = fpn_to_leafmeans(coeffs, order, tree);
    AngleMap::mallat_forward(tree, &means)
}

/// Zeroth angular moment of a Haar map.
pub fn scalar_flux_haar(map: &AngleMap) -> f64 {
    map.scalar_flux()
}

/// Zeroth angular moment of a harmonic coefficient block.
pub fn scalar_flux_fpn(coeffs: &[f64]) -> f64 {
    FOUR_PI.sqrt() * coeffs[0]
}
