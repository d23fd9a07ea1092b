//! Quadrature utilities: Gauss-Legendre rules and product rules on the
//! sphere and on single patches.

use crate::sphere::{Direction, SpherePatch, TWO_PI};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| half * wi).collect(),
    )
}

/// Integrate `f` over the whole sphere with a Gauss(mu) x uniform(phi)
/// product rule. The phi rule is the periodic rectangle rule, which is the
/// trapezoid rule on a periodic integrand.
pub fn sphere_product(f: impl Fn(&Direction) -> f64, n_mu: usize, n_phi: usize) -> f64 {
    let (mu, wmu) = gauss_legendre(n_mu);
    let wphi = TWO_PI / n_phi as f64;
    let mut total = 0.0;
    for (m, wm) in mu.iter().zip(&wmu) {
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * wphi;
            total += wm * wphi * f(&Direction::new(phi, *m));
        }
    }
    total
}

/// Integrate `f` over one patch with a tensor Gauss rule. The polar variable
/// is the angle theta (mu = cos theta), where smooth directional integrands
/// stay smooth all the way to the poles.
pub fn patch_product(f: impl Fn(&Direction) -> f64, p: &SpherePatch, n_theta: usize, n_phi: usize) -> f64 {
    let th_lo = p.mu_hi.clamp(-1.0, 1.0).acos();
    let th_hi = p.mu_lo.clamp(-1.0, 1.0).acos();
    let (th, wth) = gauss_legendre_on(n_theta, th_lo, th_hi);
    let (ph, wph) = gauss_legendre_on(n_phi, p.phi_lo, p.phi_hi);
    let mut total = 0.0;
    for (t, wt) in th.iter().zip(&wth) {
        let mu = t.cos();
        let jac = t.sin();
        for (q, wq) in ph.iter().zip(&wph) {
            total += wt * wq * jac * f(&Direction::new(*q, mu));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{base_octants, FOUR_PI};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        // Exact through degree 9.
        for d in 0..=9u32 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn sphere_measure() {
        let total = sphere_product(|_| 1.0, 8, 16);
        assert!((total - FOUR_PI).abs() < 1e-12);
    }

    #[test]
    fn patch_rule_matches_closed_forms() {
        let p = base_octants()[0];
        let area = patch_product(|_| 1.0, &p, 16, 16);
        assert!((area - p.area()).abs() < 1e-12);
        let mx = patch_product(|d| d.unit_vector()[0], &p, 16, 16);
        assert!((mx - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }
}
