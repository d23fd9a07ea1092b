//! Wall-time scaling of the Mallat reconstruction across four decades of
//! active-function counts. The fitted log-log slope should sit near 1: the
//! transform is linear in the active size.
//!
//! ```bash
//! cargo run --release --example mallat_scaling
//! ```

use boltwave::haar::AngleMap;
use boltwave::oracle::scaling_fit;
use std::time::Instant;

fn main() {
    let mut sizes = Vec::new();
    let mut times = Vec::new();
    println!("{:>7} {:>10} {:>12} {:>12}", "level", "functions", "reps", "sec/call");
    for level in 3..=9u8 {
        let mut map = AngleMap::uniform(level, level);
        let n = map.function_count();
        let mut seed = 7u64;
        let coeffs: Vec<f64> = (0..n)
            .map(|_| {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        map.set_coefficients(&coeffs).unwrap();
        let mut out = vec![0.0; n];

        // Repeat small transforms until the sample is long enough to time.
        let mut reps = 0u64;
        let start = Instant::now();
        while start.elapsed().as_secs_f64() < 0.25 {
            map.reconstruct_into(map.coefficients(), &mut out);
            reps += 1;
        }
        let per_call = start.elapsed().as_secs_f64() / reps as f64;
        println!("{level:>7} {n:>10} {reps:>12} {per_call:>12.3e}");
        sizes.push(n as f64);
        times.push(per_call);
    }
    let slope = scaling_fit(&sizes, &times);
    println!("\nfitted exponent: {slope:.3} (1.0 is linear; anything at or below ~1.2 confirms O(n))");
}
