use boltwave::harmonics::FpnConfig;
use boltwave::mesh::{generate_duct, REGION_DETECTOR};
use boltwave::transport::{functional, solve, Dir, FpnOperator, SolveOptions, TransportOp};
use std::time::Instant;

#[test]
#[ignore]
fn duct100_fp9() {
    let mesh = generate_duct(100.0, 1.0, 0.25).unwrap();
    println!("mesh: {} elements, {} nodes", mesh.triangles.len(), 3 * mesh.triangles.len());
    let t0 = Instant::now();
    let op = FpnOperator::new(&mesh, FpnConfig::new(9, 0.1));
    println!("operator built ({} dofs) in {:.1}s", op.dim(), t0.elapsed().as_secs_f64());
    let q = op.source_rhs();
    let opts = SolveOptions { restart: 100, ..Default::default() };
    let t1 = Instant::now();
    let (psi, stats) = solve(&op, &q, Dir::Forward, &opts).unwrap();
    let f = functional(&op, &mesh, &psi, REGION_DETECTOR).unwrap();
    println!("FP9 duct100: F = {f:.6e}, iters {}, {:.1}s", stats.iterations, t1.elapsed().as_secs_f64());
}
