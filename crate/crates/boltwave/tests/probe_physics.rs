// Scratch probe for calibrating acceptance settings; removed once settled.
use boltwave::adapt::{run, AdaptConfig, RunMode};
use boltwave::harmonics::FpnConfig;
use boltwave::mesh::{generate_duct, REGION_DETECTOR, REGION_SOURCE};
use boltwave::transport::{functional, solve, Dir, FpnOperator, HaarOperator, SolveOptions, TransportOp};
use std::time::Instant;

#[test]
#[ignore]
fn probe_ray_effect_and_fpn() {
    let t0 = Instant::now();
    let mesh = generate_duct(10.0, 1.0, 0.125).unwrap();
    println!("mesh: {} elements", mesh.triangles.len());
    let maps: Vec<_> = (0..3 * mesh.triangles.len()).map(|_| boltwave::haar::AngleMap::h1(8)).collect();
    let op = HaarOperator::new(&mesh, &maps).unwrap();
    let q = op.source_rhs();
    let opts = SolveOptions::default();
    let (psi, stats) = solve(&op, &q, Dir::Forward, &opts).unwrap();
    let f_det = functional(&op, &mesh, &psi, REGION_DETECTOR).unwrap();
    let f_src = functional(&op, &mesh, &psi, REGION_SOURCE).unwrap();
    println!(
        "H1 h=0.125: F_det = {f_det:.6e}, F_src = {f_src:.6e}, ratio = {:.3e}, iters {}, {:.1}s",
        f_det / f_src,
        stats.iterations,
        t0.elapsed().as_secs_f64()
    );

    for h in [0.125, 0.0625] {
        let t1 = Instant::now();
        let mesh = generate_duct(10.0, 1.0, h).unwrap();
        let op = FpnOperator::new(&mesh, FpnConfig::new(1, 1.0));
        let q = op.source_rhs();
        let (psi, stats) = solve(&op, &q, Dir::Forward, &opts).unwrap();
        let f = functional(&op, &mesh, &psi, REGION_DETECTOR).unwrap();
        println!(
            "FP1 sigma_f=1 h={h}: F_det = {f:.6e}, iters {}, {:.1}s",
            stats.iterations,
            t1.elapsed().as_secs_f64()
        );
    }
}

#[test]
#[ignore]
fn probe_fixed_levels() {
    let mesh = generate_duct(10.0, 1.0, 0.5).unwrap();
    for level in 1..=8u8 {
        let t0 = Instant::now();
        let mut cfg = AdaptConfig::new(
            RunMode::Fixed { phi_lo: 1.47976, phi_hi: 1.661832, mu_lo: 0.0, mu_hi: 1.0, level },
            1e-3,
            REGION_DETECTOR,
        );
        cfg.max_level = 8;
        cfg.solver.restart = 25;
        let out = run(&mesh, &cfg, |_| {}).unwrap();
        let r = &out.records[0];
        println!(
            "fixed level {level}: ndof {:>9} F = {:.8e} ({:.1}s)",
            r.ndof,
            r.detector,
            t0.elapsed().as_secs_f64()
        );
    }
}

#[test]
#[ignore]
fn probe_robust_duct10() {
    let mesh = generate_duct(10.0, 1.0, 0.5).unwrap();
    let mut cfg = AdaptConfig::new(RunMode::Robust, 1e-3, REGION_DETECTOR);
    cfg.steps = 8;
    cfg.max_level = 8;
    cfg.surrogate = FpnConfig::new(1, 1.0);
    cfg.solver.restart = 50;
    let t0 = Instant::now();
    let out = run(&mesh, &cfg, |s| {
        println!(
            "step {}: ndof {:>8} mean {:>8.1} F {: >14.6e} underres {:>6.1}% ({:.1}s)",
            s.record.step,
            s.record.ndof,
            s.record.mean_angle_dofs,
            s.record.detector,
            s.record.underresolved_pct,
            t0.elapsed().as_secs_f64()
        );
    })
    .unwrap();
    println!("total {:.1}s, final ndof {}", t0.elapsed().as_secs_f64(), out.records.last().unwrap().ndof);
}
