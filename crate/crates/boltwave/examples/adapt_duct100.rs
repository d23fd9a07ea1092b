//! The long-duct stress case: 100 cm of vacuum between source and detector,
//! adapted with an FP9 surrogate and a light filter. Expect several minutes
//! of runtime; expect the recorded DOF count to dip once the wavelets reach
//! the asymptotic regime and shed the surrogate-driven refinement.
//!
//! ```bash
//! cargo run --release --example adapt_duct100
//! ```

use boltwave::adapt::{run, AdaptConfig, RunMode};
use boltwave::harmonics::FpnConfig;
use boltwave::mesh::{generate_duct, REGION_DETECTOR};
use std::time::Instant;

fn main() {
    let mesh = generate_duct(100.0, 1.0, 0.25).unwrap();
    println!("102 x 1 cm domain, {} elements\n", mesh.triangles.len());

    let mut cfg = AdaptConfig::new(RunMode::Robust, 1e-6, REGION_DETECTOR);
    cfg.steps = 6;
    cfg.max_level = 6;
    cfg.surrogate = FpnConfig::new(9, 0.1);
    cfg.solver.restart = 50;

    println!(
        "{:>5} {:>10} {:>10} {:>18} {:>9} {:>9}",
        "step", "ndof", "dofs/node", "detector", "underres%", "minutes"
    );
    let t0 = Instant::now();
    run(&mesh, &cfg, |s| {
        println!(
            "{:>5} {:>10} {:>10.1} {:>18.10e} {:>9.1} {:>9.1}",
            s.record.step,
            s.record.ndof,
            s.record.mean_angle_dofs,
            s.record.detector,
            s.record.underresolved_pct,
            t0.elapsed().as_secs_f64() / 60.0
        );
    })
    .unwrap();
    println!("\ntotal {:.1} min", t0.elapsed().as_secs_f64() / 60.0);
}
