//! Adaptive Haar wavelets on the sphere: the Mallat transform pair,
//! value-preserving refinement, and the energy identity.
//!
//! ```bash
//! cargo run --release --example haar_transforms
//! ```

use boltwave::haar::{AngleMap, CoeffId};
use boltwave::sphere::{base_octants, PatchId};

fn main() {
    // One subdivision of octant 0 with hand-picked coefficients.
    let mut map = AngleMap::h1(6);
    map.refine(&[PatchId::octant(0)]);
    let mut coeffs = vec![0.0; map.function_count()];
    coeffs[0] = 2.5; // octant scaling
    coeffs[1] = 0.5; // phi detail
    coeffs[2] = 1.0; // mu detail
    coeffs[3] = 0.0; // diagonal detail
    map.set_coefficients(&coeffs).unwrap();
    let leaves = map.mallat_inverse();
    println!("reconstruction of (s, w_phi, w_mu, w_diag) = (2.5, 0.5, 1.0, 0.0):");
    println!("  leaf values on octant 0: {:?}", &leaves[0..4]);

    let back = AngleMap::mallat_forward(&map, &leaves).unwrap();
    println!("  forward transform recovers: {:?}\n", &back.coefficients()[0..4]);

    // Refinement inserts zero wavelets, so the function is unchanged.
    let before = map.mallat_inverse();
    let target = map.leaf_ids()[1].clone();
    map.refine(&[target.clone()]);
    let after = map.mallat_inverse();
    println!("refining leaf {target:?} preserves the represented function:");
    println!("  {} leaves -> {} leaves, function count {}", before.len(), after.len(), map.function_count());

    // Energy identity: leaf-space and coefficient-space energies agree.
    let mut seed = 42u64;
    let mut rng = move || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let rand_coeffs: Vec<f64> = (0..map.function_count()).map(|_| rng()).collect();
    map.set_coefficients(&rand_coeffs).unwrap();
    let leaves = map.mallat_inverse();
    let patches = map.leaf_patches();
    let leaf_energy: f64 = leaves.iter().zip(&patches).map(|(v, p)| v * v * p.area()).sum();
    let coeff_energy: f64 = map
        .coeff_ids()
        .iter()
        .zip(map.coefficients())
        .map(|(id, c)| {
            let support = match id {
                CoeffId::Scaling(o) => base_octants()[*o as usize].area(),
                CoeffId::Wavelet(p, _) => p.geometry().area(),
            };
            c * c * support
        })
        .sum();
    println!("\nenergy identity on a random map:");
    println!("  sum over leaves  of value^2 * area    = {leaf_energy:.12}");
    println!("  sum over coeffs  of coeff^2 * support = {coeff_energy:.12}");

    // Coarsening drops details; with untouched coefficients it inverts refine.
    let mut m2 = AngleMap::h1(4);
    m2.refine(&[PatchId::octant(3)]);
    let snapshot = m2.clone();
    m2.refine(&[PatchId { octant: 3, path: vec![2] }]);
    m2.coarsen(&[PatchId { octant: 3, path: vec![2] }]);
    println!("\nrefine-then-coarsen restores the original map: {}", m2 == snapshot);
}
