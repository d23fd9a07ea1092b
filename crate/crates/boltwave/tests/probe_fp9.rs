use boltwave::harmonics::FpnConfig;
use boltwave::mesh::{generate_duct, REGION_DETECTOR};
use boltwave::transport::{functional, solve, Dir, FpnOperator, SolveOptions, TransportOp};
use std::time::Instant;

#[test]
#[ignore]
fn fp9_duct10_tolerances() {
    let mesh = generate_duct(10.0, 1.0, 0.25).unwrap();
    let op = FpnOperator::new(&mesh, FpnConfig::new(9, 0.1));
    println!("dofs {}", op.dim());
    let q = op.source_rhs();
    for tol in [1e-5f64, 1e-8, 1e-10] {
        let t0 = Instant::now();
        let opts = SolveOptions { abs_tol: tol, rel_tol: tol, restart: 100, ..Default::default() };
        let (psi, stats) = solve(&op, &q, Dir::Forward, &opts).unwrap();
        let f = functional(&op, &mesh, &psi, REGION_DETECTOR).unwrap();
        println!("tol {tol:.0e}: iters {} F {f:.8e} ({:.1}s)", stats.iterations, t0.elapsed().as_secs_f64());
    }
}
