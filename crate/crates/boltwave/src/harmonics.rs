//! Real orthonormal spherical harmonics, the sinc-filter removal
//! coefficients, streaming moment matrices and z-rotations.
//!
//! Conventions (pinned because the Haar projection depends on signs):
//! no Condon-Shortley phase, and
//! `Y_{l,0} = Pbar_l^0(mu)`, `Y_{l,m>0} = sqrt(2) Pbar_l^m(mu) cos(m phi)`,
//! `Y_{l,m<0} = sqrt(2) Pbar_l^{|m|}(mu) sin(|m| phi)`, where `Pbar` is the
//! fully normalised associated Legendre function.

use crate::quad::gauss_legendre;
use crate::sphere::{Direction, TWO_PI};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarmonicsError {
    #[error("|m| = {m} exceeds degree l = {l}")]
    OrderOutOfRange { l: u32, m: i32 },
    #[error("coefficient vector length {got} is not (N+1)^2 for any N (or mismatches N = {expect_n})")]
    BadCoeffLength { got: usize, expect_n: usize },
}

/// Degree/order pair with the standard flattening `l^2 + l + m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicIndex {
    pub l: u32,
    pub m: i32,
}

impl HarmonicIndex {
    pub fn flat(&self) -> usize {
        (self.l * self.l) as usize + (self.l as i32 + self.m) as usize
    }

    pub fn from_flat(idx: usize) -> Self {
        let l = (idx as f64).sqrt().floor() as u32;
        let m = idx as i32 - (l * l + l) as i32;
        HarmonicIndex { l, m }
    }
}

/// Filtered-harmonics configuration: expansion order and filter strength
/// (in 1/cm, entering the operator as forward-peaked removal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpnConfig {
    pub order: u32,
    pub sigma_f: f64,
    pub filter: FilterKind,
}

impl FpnConfig {
    pub fn new(order: u32, sigma_f: f64) -> Self {
        FpnConfig { order, sigma_f, filter: FilterKind::Sinc }
    }

    pub fn function_count(&self) -> usize {
        ((self.order + 1) * (self.order + 1)) as usize
    }
}

/// Shape of the spectral filter `sigma(eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterKind {
    /// `sin(eta)/eta` with the argument in radians.
    #[default]
    Sinc,
    /// Lanczos variant `sin(pi eta)/(pi eta)`.
    Lanczos,
}

impl FilterKind {
    fn sigma(&self, eta: f64) -> f64 {
        let x = match self {
            FilterKind::Sinc => eta,
            FilterKind::Lanczos => std::f64::consts::PI * eta,
        };
        if x.abs() < 1e-12 {
            1.0
        } else {
            x.sin() / x
        }
    }
}

pub fn flat_count(order: u32) -> usize {
    ((order + 1) * (order + 1)) as usize
}

/// Fully normalised associated Legendre values `Pbar_l^m(x)` for all
/// `0 <= m <= l <= n`, triangular layout `l(l+1)/2 + m`. No Condon-Shortley
/// phase.
pub fn normalized_legendre_table(n: u32, x: f64, out: &mut Vec<f64>) {
    let count = ((n + 1) * (n + 2) / 2) as usize;
    out.clear();
    out.resize(count, 0.0);
    let tri = |l: u32, m: u32| -> usize { (l * (l + 1) / 2 + m) as usize };
    let s = (1.0 - x * x).max(0.0).sqrt();
    out[0] = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    // Diagonal: Pbar_m^m.
    for m in 1..=n {
        let mf = m as f64;
        out[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * out[tri(m - 1, m - 1)];
    }
    // First off-diagonal: Pbar_{m+1}^m.
    for m in 0..n {
        let mf = m as f64;
        out[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * out[tri(m, m)];
    }
    // Upward recurrence in l.
    for m in 0..=n {
        for l in (m + 2)..=n {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[tri(l, m)] = a * (x * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
}

/// Evaluate one real orthonormal harmonic.
pub fn eval_y(idx: HarmonicIndex, d: &Direction) -> Result<f64, HarmonicsError> {
    let HarmonicIndex { l, m } = idx;
    if m.unsigned_abs() > l {
        return Err(HarmonicsError::OrderOutOfRange { l, m });
    }
    let mut table = Vec::new();
    normalized_legendre_table(l, d.mu, &mut table);
    let ma = m.unsigned_abs();
    let p = table[(l * (l + 1) / 2 + ma) as usize];
    let sqrt2 = std::f64::consts::SQRT_2;
    Ok(match m.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => sqrt2 * p * (m as f64 * d.phi).cos(),
        std::cmp::Ordering::Less => sqrt2 * p * (ma as f64 * d.phi).sin(),
    })
}

/// Evaluate all `(order+1)^2` harmonics at one direction, flat layout.
pub fn eval_all(order: u32, d: &Direction, out: &mut Vec<f64>) {
    let mut table = Vec::new();
    normalized_legendre_table(order, d.mu, &mut table);
    let count = flat_count(order);
    out.clear();
    out.resize(count, 0.0);
    let sqrt2 = std::f64::consts::SQRT_2;
    // cos/sin recurrences avoid per-harmonic trig.
    let (cp, sp) = (d.phi.cos(), d.phi.sin());
    let mut cos_m = vec![0.0; order as usize + 1];
    let mut sin_m = vec![0.0; order as usize + 1];
    cos_m[0] = 1.0;
    sin_m[0] = 0.0;
    for m in 1..=order as usize {
        cos_m[m] = cos_m[m - 1] * cp - sin_m[m - 1] * sp;
        sin_m[m] = sin_m[m - 1] * cp + cos_m[m - 1] * sp;
    }
    for l in 0..=order {
        for m in 0..=l {
            let p = table[(l * (l + 1) / 2 + m) as usize];
            let base = (l * l + l) as usize;
            if m == 0 {
                out[base] = p;
            } else {
                out[base + m as usize] = sqrt2 * p * cos_m[m as usize];
                out[base - m as usize] = sqrt2 * p * sin_m[m as usize];
            }
        }
    }
}

/// Removal coefficient `sigma_f * (-ln sigma(l/(N+1)))`, exactly zero for
/// l = 0. Strictly increasing in l for positive filter strength.
pub fn filter_coeff(l: u32, order: u32, sigma_f: f64) -> f64 {
    filter_coeff_with(FilterKind::Sinc, l, order, sigma_f)
}

pub fn filter_coeff_with(kind: FilterKind, l: u32, order: u32, sigma_f: f64) -> f64 {
    debug_assert!(l <= order);
    if l == 0 {
        return 0.0;
    }
    let eta = l as f64 / (order as f64 + 1.0);
    -sigma_f * kind.sigma(eta).ln()
}

/// Minimal CSR matrix for the sparse streaming moments.
#[derive(Debug, Clone)]
pub struct Csr {
    pub dim: usize,
    pub indptr: Vec<u32>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(dim: usize, mut t: Vec<(u32, u32, f64)>) -> Csr {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0u32; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            indptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        Csr { dim, indptr, cols, vals }
    }

    /// `y += s * A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64], s: f64) {
        for r in 0..self.dim {
            let lo = self.indptr[r] as usize;
            let hi = self.indptr[r + 1] as usize;
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] += s * acc;
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.indptr[r] as usize..self.indptr[r + 1] as usize {
                m[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        for k in self.indptr[r] as usize..self.indptr[r + 1] as usize {
            if self.cols[k] as usize == c {
                return self.vals[k];
            }
        }
        0.0
    }
}

/// The three streaming moment matrices `(M_k)_{ab} = int Y_a Omega_k Y_b`.
#[derive(Debug, Clone)]
pub struct MomentMatrices {
    pub order: u32,
    pub mx: Csr,
    pub my: Csr,
    pub mz: Csr,
}

/// Assemble the moment matrices by a product rule that is exact for the
/// integrand's band limit: Gauss-Legendre in mu with N+2 points, periodic
/// rectangle rule in phi with 4N+5 points. Directional coupling only links
/// degrees differing by one, so only those pairs are computed; everything
/// else is exactly zero.
pub fn moment_matrices(order: u32) -> MomentMatrices {
    let dim = flat_count(order);
    let n_mu = (order + 2) as usize;
    let n_phi = (4 * order + 5) as usize;
    let (mu, wmu) = gauss_legendre(n_mu);
    let wphi = TWO_PI / n_phi as f64;

    // Quadrature-point tables of all harmonics and the three direction
    // components.
    let n_q = n_mu * n_phi;
    let mut ytab = vec![0.0; n_q * dim];
    let mut om = vec![[0.0f64; 3]; n_q];
    let mut w = vec![0.0; n_q];
    let mut buf = Vec::new();
    let mut q = 0;
    for (mi, m) in mu.iter().enumerate() {
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * wphi;
            let d = Direction::new(phi, *m);
            eval_all(order, &d, &mut buf);
            ytab[q * dim..(q + 1) * dim].copy_from_slice(&buf);
            om[q] = d.unit_vector();
            w[q] = wmu[mi] * wphi;
            q += 1;
        }
    }

    let mut trip: [Vec<(u32, u32, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for a in 0..dim {
        let ia = HarmonicIndex::from_flat(a);
        for b in a..dim {
            let ib = HarmonicIndex::from_flat(b);
            if ia.l.abs_diff(ib.l) != 1 || ia.m.abs_diff(ib.m) > 1 {
                continue;
            }
            let mut acc = [0.0f64; 3];
            for q in 0..n_q {
                let yy = w[q] * ytab[q * dim + a] * ytab[q * dim + b];
                acc[0] += yy * om[q][0];
                acc[1] += yy * om[q][1];
                acc[2] += yy * om[q][2];
            }
            for k in 0..3 {
                if acc[k].abs() > 1e-14 {
                    trip[k].push((a as u32, b as u32, acc[k]));
                    if a != b {
                        trip[k].push((b as u32, a as u32, acc[k]));
                    }
                }
            }
        }
    }
    let [tx, ty, tz] = trip;
    MomentMatrices {
        order,
        mx: Csr::from_triplets(dim, tx),
        my: Csr::from_triplets(dim, ty),
        mz: Csr::from_triplets(dim, tz),
    }
}

/// Rotate an expansion about the z axis: within each (l, |m|) pair the
/// cos/sin coefficients mix by a 2D rotation of angle m*alpha; degrees do
/// not mix.
pub fn rotate_z(coeffs: &[f64], angle: f64) -> Result<Vec<f64>, HarmonicsError> {
    let n = (coeffs.len() as f64).sqrt().round() as usize;
    if n * n != coeffs.len() || n == 0 {
        return Err(HarmonicsError::BadCoeffLength { got: coeffs.len(), expect_n: n.saturating_sub(1) });
    }
    let order = (n - 1) as u32;
    let mut out = coeffs.to_vec();
    for l in 0..=order {
        let base = (l * l + l) as usize;
        for m in 1..=l {
            let (c, s) = ((m as f64 * angle).cos(), (m as f64 * angle).sin());
            let a = coeffs[base + m as usize];
            let b = coeffs[base - m as usize];
            out[base + m as usize] = a * c - b * s;
            out[base - m as usize] = a * s + b * c;
        }
    }
    Ok(out)
}

/// Evaluate an expansion at a direction.
pub fn eval_expansion(coeffs: &[f64], order: u32, d: &Direction) -> f64 {
    let mut y = Vec::new();
    eval_all(order, d, &mut y);
    coeffs.iter().zip(&y).map(|(c, yv)| c * yv).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::sphere_product;
    use crate::sphere::FOUR_PI;

    #[test]
    fn constant_harmonic() {
        let d = Direction::new(1.234, -0.4);
        let v = eval_y(HarmonicIndex { l: 0, m: 0 }, &d).unwrap();
        assert!((v - 0.2820947917738781).abs() < 1e-12);
    }

    #[test]
    fn polar_value_of_y10() {
        let d = Direction::new(0.7, 1.0);
        let v = eval_y(HarmonicIndex { l: 1, m: 0 }, &d).unwrap();
        assert!((v - 0.4886025119029199).abs() < 1e-12);
    }

    #[test]
    fn order_out_of_range() {
        let d = Direction::new(0.0, 0.0);
        assert!(eval_y(HarmonicIndex { l: 1, m: 2 }, &d).is_err());
    }

    #[test]
    fn flat_index_bijection() {
        let mut seen = vec![false; 100];
        for l in 0..=9u32 {
            for m in -(l as i32)..=(l as i32) {
                let idx = HarmonicIndex { l, m };
                let f = idx.flat();
                assert!(!seen[f]);
                seen[f] = true;
                assert_eq!(HarmonicIndex::from_flat(f), idx);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn gram_matrix_is_identity() {
        // Quadrature oracle at 10x the band-limit resolution, accumulated in
        // one sweep over the product grid.
        let order = 9u32;
        let dim = flat_count(order);
        let (mu, wmu) = crate::quad::gauss_legendre(110);
        let n_phi = 410usize;
        let wphi = TWO_PI / n_phi as f64;
        let mut gram = vec![0.0f64; dim * dim];
        let mut y = Vec::new();
        for (m, wm) in mu.iter().zip(&wmu) {
            for j in 0..n_phi {
                let d = Direction::new((j as f64 + 0.5) * wphi, *m);
                eval_all(order, &d, &mut y);
                let w = wm * wphi;
                for a in 0..dim {
                    let wa = w * y[a];
                    for b in a..dim {
                        gram[a * dim + b] += wa * y[b];
                    }
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (gram[a * dim + b] - expect).abs() < 1e-12,
                    "({a},{b}) -> {}",
                    gram[a * dim + b]
                );
            }
        }
    }

    #[test]
    fn addition_theorem() {
        let mut s = 0x243f6a8885a308d3u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let d = Direction::new(rng() * TWO_PI, rng() * 2.0 - 1.0);
            for l in 0..=9u32 {
                let sum: f64 = (-(l as i32)..=(l as i32))
                    .map(|m| eval_y(HarmonicIndex { l, m }, &d).unwrap().powi(2))
                    .sum();
                let expect = (2.0 * l as f64 + 1.0) / FOUR_PI;
                assert!((sum - expect).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn filter_values() {
        assert_eq!(filter_coeff(0, 7, 123.0), 0.0);
        let v = filter_coeff(1, 1, 1.0);
        assert!((v - 0.0420191).abs() < 1e-6, "{v}");
        // Strictly increasing in l.
        for n in [3u32, 9, 21] {
            let mut prev = 0.0;
            for l in 1..=n {
                let c = filter_coeff(l, n, 0.7);
                assert!(c > prev);
                prev = c;
            }
        }
    }

    #[test]
    fn moment_matrix_entries() {
        let mm = moment_matrices(1);
        // (0,0)-(1,0) coupling through Omega_z is 1/sqrt(3).
        let a = HarmonicIndex { l: 0, m: 0 }.flat();
        let b = HarmonicIndex { l: 1, m: 0 }.flat();
        let got = mm.mz.entry(a, b);
        assert!((got - 1.0 / 3.0f64.sqrt()).abs() < 1e-13);
        // Against the independent high-resolution oracle.
        let oracle = sphere_product(
            |d| {
                eval_y(HarmonicIndex { l: 0, m: 0 }, d).unwrap()
                    * d.mu
                    * eval_y(HarmonicIndex { l: 1, m: 0 }, d).unwrap()
            },
            40,
            90,
        );
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn moment_matrices_symmetric() {
        for order in [1u32, 4] {
            let mm = moment_matrices(order);
            for m in [&mm.mx, &mm.my, &mm.mz] {
                let d = m.to_dense();
                let diff = (&d - d.transpose()).abs().max();
                assert!(diff < 1e-13);
            }
        }
    }

    #[test]
    fn directional_moments_have_unit_bound() {
        // |Omega . n| <= 1 bounds the spectrum of the directional moment
        // matrix for in-plane normals.
        let mut s = 0xdeadbeef12345u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for order in [3u32, 9] {
            let mm = moment_matrices(order);
            for _ in 0..20 {
                let ang = rng() * TWO_PI;
                let (nx, ny) = (ang.cos(), ang.sin());
                let mut d = mm.mx.to_dense();
                d *= nx;
                d += my_scaled(&mm.my, ny);
                let eig = nalgebra::SymmetricEigen::new(d);
                let rho = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                assert!(rho <= 1.0 + 1e-10, "rho = {rho}");
            }
        }
    }

    fn my_scaled(m: &Csr, s: f64) -> nalgebra::DMatrix<f64> {
        let mut d = m.to_dense();
        d *= s;
        d
    }

    #[test]
    fn rotation_group_properties() {
        let order = 5u32;
        let dim = flat_count(order);
        let mut s = 77u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let coeffs: Vec<f64> = (0..dim).map(|_| rng()).collect();
        // angle 0 is the identity.
        let same = rotate_z(&coeffs, 0.0).unwrap();
        assert_eq!(same, coeffs);
        // rotate by a then -a is the identity.
        let fwd = rotate_z(&coeffs, 0.83).unwrap();
        let back = rotate_z(&fwd, -0.83).unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_matches_pointwise_shift() {
        let order = 6u32;
        let dim = flat_count(order);
        let mut s = 99u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let coeffs: Vec<f64> = (0..dim).map(|_| rng() - 0.5).collect();
        let alpha = 0.6178;
        let rot = rotate_z(&coeffs, alpha).unwrap();
        for _ in 0..100 {
            let d = Direction::new(rng() * TWO_PI, rng() * 2.0 - 1.0);
            let shifted = Direction::new(d.phi - alpha, d.mu);
            let lhs = eval_expansion(&rot, order, &d);
            let rhs = eval_expansion(&coeffs, order, &shifted);
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }

    #[test]
    fn filter_commutes_with_rotation() {
        let order = 7u32;
        let dim = flat_count(order);
        let cfg = FpnConfig::new(order, 1.3);
        let mut s = 5u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let coeffs: Vec<f64> = (0..dim).map(|_| rng()).collect();
        let damp = |c: &[f64], t: f64| -> Vec<f64> {
            c.iter()
                .enumerate()
                .map(|(i, v)| {
                    let l = HarmonicIndex::from_flat(i).l;
                    v * (-filter_coeff(l, cfg.order, cfg.sigma_f) * t).exp()
                })
                .collect()
        };
        for t in [0.3, 2.0] {
            let a = rotate_z(&damp(&coeffs, t), 0.9).unwrap();
            let b = damp(&rotate_z(&coeffs, 0.9).unwrap(), t);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
