//! The hierarchical equal-area sphere partition: octants, subdivision,
//! closed-form direction moments and upwind half-range fluxes.
//!
//! ```bash
//! cargo run --release --example sphere_partition
//! ```

use boltwave::sphere::{base_octants, Axis, FOUR_PI};

fn main() {
    let octants = base_octants();
    println!("base octants (phi quadrant x mu hemisphere):");
    let mut total = 0.0;
    for (i, p) in octants.iter().enumerate() {
        total += p.area();
        println!(
            "  {i}: phi [{:.4}, {:.4}]  mu [{:+.1}, {:+.1}]  area {:.6}",
            p.phi_lo, p.phi_hi, p.mu_lo, p.mu_hi,
            p.area()
        );
    }
    println!("  total area {total:.12} (4 pi = {:.12})\n", FOUR_PI);

    let p = octants[0];
    println!("first moments of octant 0:");
    for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y"), (Axis::Z, "z")] {
        println!("  int Omega_{name} dOmega = {:.12}", p.moment(axis));
    }
    println!("  (x and z both equal pi/4 = {:.12})\n", std::f64::consts::PI / 4.0);

    println!("equal-area subdivision of octant 0:");
    for (k, c) in p.children().iter().enumerate() {
        println!(
            "  child {k}: phi [{:.4}, {:.4}]  mu [{:.2}, {:.2}]  area {:.6}",
            c.phi_lo, c.phi_hi, c.mu_lo, c.mu_hi,
            c.area()
        );
    }

    println!("\nhalf-range fluxes of octant 0 against in-plane normals:");
    for n in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.5f64.sqrt(), 0.5f64.sqrt()]] {
        let (plus, minus) = p.half_range_flux(n);
        let m = p.moment_xy();
        let proj = m[0] * n[0] + m[1] * n[1];
        println!(
            "  n = ({:+.3}, {:+.3}): plus {:+.6}  minus {:+.6}  (sum {:+.6}, moment.n {:+.6})",
            n[0], n[1], plus, minus, plus + minus, proj
        );
    }
}
