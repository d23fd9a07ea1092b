//! Hierarchical equal-area partition of the unit sphere.
//!
//! The sphere is parametrised by azimuth `phi` in `[0, 2pi)` and the cosine of
//! the polar angle `mu` in `[-1, 1]`, so the area element is `dphi dmu`. The
//! base level has eight octants (phi quadrants crossed with the two mu
//! hemispheres); every patch splits into four children of exactly equal area
//! at the phi and mu midpoints. Patches carry closed-form first moments of the
//! direction vector, which is what the streaming and upwind terms of the
//! transport operator consume.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;
pub const FOUR_PI: f64 = 4.0 * PI;

/// A direction on the unit sphere, stored as azimuth + polar cosine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Azimuth in radians, `[0, 2pi)`.
    pub phi: f64,
    /// Cosine of the polar angle, `[-1, 1]`.
    pub mu: f64,
}

impl Direction {
    pub fn new(phi: f64, mu: f64) -> Self {
        debug_assert!((-1.0..=1.0).contains(&mu));
        Direction { phi, mu }
    }

    /// Cartesian unit vector `(sqrt(1-mu^2) cos phi, sqrt(1-mu^2) sin phi, mu)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let s = (1.0 - self.mu * self.mu).max(0.0).sqrt();
        [s * self.phi.cos(), s * self.phi.sin(), self.mu]
    }
}

/// Index of a patch in the hierarchy: base octant plus the child path taken
/// from it. Children are numbered (phi-lo, mu-lo), (phi-hi, mu-lo),
/// (phi-lo, mu-hi), (phi-hi, mu-hi).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchId {
    pub octant: u8,
    pub path: Vec<u8>,
}

impl PatchId {
    pub fn octant(octant: u8) -> Self {
        PatchId { octant, path: Vec::new() }
    }

    pub fn child(&self, c: u8) -> Self {
        debug_assert!(c < 4);
        let mut path = self.path.clone();
        path.push(c);
        PatchId { octant: self.octant, path }
    }

    pub fn level(&self) -> usize {
        self.path.len()
    }

    /// Packed key: 3 bits octant, 5 bits level, 2 bits per path step.
    /// Unique for levels up to 28.
    pub fn key(&self) -> u64 {
        let mut k = (self.octant as u64) | ((self.path.len() as u64) << 3);
        for (i, &c) in self.path.iter().enumerate() {
            k |= (c as u64) << (8 + 2 * i);
        }
        k
    }

    pub fn geometry(&self) -> SpherePatch {
        let mut p = base_octants()[self.octant as usize];
        for &c in &self.path {
            p = p.children()[c as usize];
        }
        p
    }
}

/// An axis-aligned patch `[phi_lo, phi_hi] x [mu_lo, mu_hi]` of the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePatch {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub level: u8,
}

/// The eight base octants in canonical order: mu-major (upper hemisphere
/// `mu in [0,1]` first), then by phi quadrant. Octant 0 is
/// `phi in [0, pi/2] x mu in [0, 1]`.
pub fn base_octants() -> [SpherePatch; 8] {
    let mut out = [SpherePatch { phi_lo: 0.0, phi_hi: 0.0, mu_lo: 0.0, mu_hi: 0.0, level: 0 }; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        let q = i % 4;
        let upper = i < 4;
        *slot = SpherePatch {
            phi_lo: q as f64 * PI / 2.0,
            phi_hi: (q + 1) as f64 * PI / 2.0,
            mu_lo: if upper { 0.0 } else { -1.0 },
            mu_hi: if upper { 1.0 } else { 0.0 },
            level: 0,
        };
    }
    out
}

impl SpherePatch {
    /// Area in the `dphi dmu` measure (equal to solid angle).
    pub fn area(&self) -> f64 {
        (self.phi_hi - self.phi_lo) * (self.mu_hi - self.mu_lo)
    }

    pub fn centroid(&self) -> Direction {
        Direction::new(0.5 * (self.phi_lo + self.phi_hi), 0.5 * (self.mu_lo + self.mu_hi))
    }

    pub fn contains(&self, d: &Direction) -> bool {
        d.phi >= self.phi_lo && d.phi <= self.phi_hi && d.mu >= self.mu_lo && d.mu <= self.mu_hi
    }

    /// Four equal-area children, split at the phi and mu midpoints.
    /// Order: (phi-lo, mu-lo), (phi-hi, mu-lo), (phi-lo, mu-hi), (phi-hi, mu-hi).
    pub fn children(&self) -> [SpherePatch; 4] {
        let pm = 0.5 * (self.phi_lo + self.phi_hi);
        let mm = 0.5 * (self.mu_lo + self.mu_hi);
        let lv = self.level + 1;
        [
            SpherePatch { phi_lo: self.phi_lo, phi_hi: pm, mu_lo: self.mu_lo, mu_hi: mm, level: lv },
            SpherePatch { phi_lo: pm, phi_hi: self.phi_hi, mu_lo: self.mu_lo, mu_hi: mm, level: lv },
            SpherePatch { phi_lo: self.phi_lo, phi_hi: pm, mu_lo: mm, mu_hi: self.mu_hi, level: lv },
            SpherePatch { phi_lo: pm, phi_hi: self.phi_hi, mu_lo: mm, mu_hi: self.mu_hi, level: lv },
        ]
    }

    /// Closed-form `integral over the patch of Omega_k dOmega` for k = x, y, z.
    pub fn moment(&self, k: Axis) -> f64 {
        match k {
            Axis::Z => (self.phi_hi - self.phi_lo) * 0.5 * (self.mu_hi * self.mu_hi - self.mu_lo * self.mu_lo),
            Axis::X => (self.phi_hi.sin() - self.phi_lo.sin()) * (g_mu(self.mu_hi) - g_mu(self.mu_lo)),
            Axis::Y => (self.phi_lo.cos() - self.phi_hi.cos()) * (g_mu(self.mu_hi) - g_mu(self.mu_lo)),
        }
    }

    /// In-plane moment vector `(int Omega_x, int Omega_y)`.
    pub fn moment_xy(&self) -> [f64; 2] {
        let im = g_mu(self.mu_hi) - g_mu(self.mu_lo);
        [
            (self.phi_hi.sin() - self.phi_lo.sin()) * im,
            (self.phi_lo.cos() - self.phi_hi.cos()) * im,
        ]
    }

    /// Signed half-range fluxes against an in-plane unit normal `n`:
    /// `plus = int max(Omega.n, 0)`, `minus = int min(Omega.n, 0)`.
    ///
    /// With n in the x-y plane, `Omega.n = sqrt(1-mu^2) cos(phi - phi_n)`, so
    /// the sign depends on phi alone. Splitting the phi interval at the sign
    /// changes of `cos(phi - phi_n)` leaves each piece with a closed-form
    /// integral; no quadrature is involved.
    pub fn half_range_flux(&self, n: [f64; 2]) -> (f64, f64) {
        debug_assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-9);
        let phi_n = n[1].atan2(n[0]);
        let imu = g_mu(self.mu_hi) - g_mu(self.mu_lo);

        // Integral of cos(phi - phi_n) over [a, b] is sin(b - phi_n) - sin(a - phi_n).
        // Sign changes sit at phi_n + pi/2 + k*pi.
        let mut plus = 0.0;
        let mut minus = 0.0;
        let mut segment = |a: f64, b: f64| {
            if b <= a {
                return;
            }
            let v = ((b - phi_n).sin() - (a - phi_n).sin()) * imu;
            let mid = 0.5 * (a + b) - phi_n;
            if mid.cos() >= 0.0 {
                plus += v;
            } else {
                minus += v;
            }
        };

        // Enumerate sign-change points inside [phi_lo, phi_hi].
        let lo = self.phi_lo;
        let hi = self.phi_hi;
        let first_k = ((lo - phi_n - PI / 2.0) / PI).ceil() as i64;
        let mut cuts = Vec::with_capacity(3);
        let mut k = first_k;
        loop {
            let c = phi_n + PI / 2.0 + k as f64 * PI;
            if c >= hi {
                break;
            }
            if c > lo {
                cuts.push(c);
            }
            k += 1;
        }
        let mut a = lo;
        for c in cuts {
            segment(a, c);
            a = c;
        }
        segment(a, hi);
        (plus, minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Antiderivative of `sqrt(1 - mu^2)`: `(mu sqrt(1-mu^2) + asin mu) / 2`.
fn g_mu(mu: f64) -> f64 {
    0.5 * (mu * (1.0 - mu * mu).max(0.0).sqrt() + mu.clamp(-1.0, 1.0).asin())
}
