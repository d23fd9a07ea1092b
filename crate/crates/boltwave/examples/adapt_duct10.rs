//! Goal-based angular adaptivity on the 10 cm duct, bootstrapped by an FP1
//! surrogate. Watch the underresolved fraction fall to zero as the wavelets
//! take over, and the detector error close in on the fixed-refinement
//! reference.
//!
//! ```bash
//! cargo run --release --example adapt_duct10
//! ```

use boltwave::adapt::{run, AdaptConfig, RunMode};
use boltwave::harmonics::FpnConfig;
use boltwave::mesh::{generate_duct, REGION_DETECTOR};
use std::time::Instant;

fn main() {
    let mesh = generate_duct(10.0, 1.0, 0.5).unwrap();

    // Reference: fixed refinement to level 6 over the duct's window.
    let window = RunMode::Fixed { phi_lo: 1.47976, phi_hi: 1.661832, mu_lo: 0.0, mu_hi: 1.0, level: 6 };
    let mut ref_cfg = AdaptConfig::new(window, 1e-3, REGION_DETECTOR);
    ref_cfg.max_level = 6;
    ref_cfg.solver.restart = 50;
    println!("solving the level-6 fixed-refinement reference...");
    let reference = run(&mesh, &ref_cfg, |_| {}).unwrap().records[0].detector;
    println!("reference detector = {reference:.10e}\n");

    let mut cfg = AdaptConfig::new(RunMode::Robust, 1e-3, REGION_DETECTOR);
    cfg.steps = 6;
    cfg.max_level = 6;
    cfg.surrogate = FpnConfig::new(1, 1.0);
    cfg.reference = Some(reference);
    cfg.solver.restart = 50;

    println!(
        "{:>5} {:>9} {:>10} {:>18} {:>11} {:>12} {:>9}",
        "step", "ndof", "dofs/node", "detector", "rel_error", "effectivity", "underres%"
    );
    let t0 = Instant::now();
    run(&mesh, &cfg, |s| {
        println!(
            "{:>5} {:>9} {:>10.1} {:>18.10e} {:>11.4e} {:>12.4e} {:>9.1}",
            s.record.step,
            s.record.ndof,
            s.record.mean_angle_dofs,
            s.record.detector,
            s.record.rel_error,
            s.record.effectivity,
            s.record.underresolved_pct
        );
    })
    .unwrap();
    println!("\ntotal {:.1} s (surrogate solves included)", t0.elapsed().as_secs_f64());
}
