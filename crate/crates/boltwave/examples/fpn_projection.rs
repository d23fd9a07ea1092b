//! Projecting a filtered-harmonics field onto an adaptive Haar map: exact
//! per-leaf means, moment conservation, and scalar-flux agreement.
//!
//! ```bash
//! cargo run --release --example fpn_projection
//! ```

use boltwave::haar::AngleMap;
use boltwave::harmonics::flat_count;
use boltwave::projection::{fpn_to_anglemap, fpn_to_leafmeans, scalar_flux_fpn, scalar_flux_haar};
use boltwave::sphere::{PatchId, FOUR_PI};

fn main() {
    let order = 5u32;
    let mut seed = 11u64;
    let coeffs: Vec<f64> = (0..flat_count(order))
        .map(|_| {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();

    // A deliberately lopsided target map.
    let mut map = AngleMap::h1(6);
    map.refine(&[PatchId::octant(1), PatchId::octant(6)]);
    map.refine(&[PatchId { octant: 1, path: vec![3] }]);
    println!("target map: {} effective leaves\n", map.leaf_count());

    let means = fpn_to_leafmeans(&coeffs, order, &map);
    println!("first leaf means: {:?}\n", &means[0..4.min(means.len())]);

    let projected = fpn_to_anglemap(&coeffs, order, &map).unwrap();
    println!(
        "scalar flux: harmonics {:+.12}  projected Haar {:+.12}",
        scalar_flux_fpn(&coeffs),
        scalar_flux_haar(&projected)
    );
    println!("(projection onto leaf means conserves the zeroth angular moment)\n");

    // Deeper maps converge to the pointwise field.
    println!("{:>6} {:>10} {:>14}", "level", "leaves", "max |mean-pt|");
    for level in 1..=4u8 {
        let uni = AngleMap::uniform(level, 6);
        let means = fpn_to_leafmeans(&coeffs, order, &uni);
        let worst = uni
            .leaf_patches()
            .iter()
            .zip(&means)
            .map(|(p, v)| {
                let c = p.centroid();
                (v - boltwave::harmonics::eval_expansion(&coeffs, order, &c)).abs()
            })
            .fold(0.0f64, f64::max);
        println!("{level:>6} {:>10} {worst:>14.4e}", uni.leaf_count());
    }

    // The constant field projects to pure scaling content.
    let mut iso = vec![0.0; flat_count(order)];
    iso[0] = FOUR_PI.sqrt();
    let proj = fpn_to_anglemap(&iso, order, &map).unwrap();
    let wavelet_energy: f64 = proj
        .coeff_ids()
        .iter()
        .zip(proj.coefficients())
        .filter(|(id, _)| matches!(id, boltwave::haar::CoeffId::Wavelet(..)))
        .map(|(_, c)| c * c)
        .sum();
    println!("\nisotropic field: wavelet energy after projection = {wavelet_energy:.3e}");
}
