//! Discrete transport operator and matrix-free solves.
//!
//! Space: linear discontinuous Galerkin on triangles (three nodes per
//! element), upwind fluxes on faces, vacuum (zero inflow) outer boundary.
//! Angle: either an adaptive Haar [`AngleMap`] per DG node or a filtered
//! spherical-harmonics block shared by all nodes. The adjoint operator is the
//! exact transpose of the forward one, applied matrix-free.

mod fpn_op;
mod gmres;
mod haar_op;

pub use fpn_op::FpnOperator;
pub use gmres::{solve, SolveError, SolveStats};
pub use haar_op::HaarOperator;

use crate::haar::AngleMap;
use crate::mesh::TriMesh;
use crate::sphere::FOUR_PI;
use std::collections::BTreeMap;

/// Which side of the duality pairing an application acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Forward,
    Adjoint,
}

/// Iterative solve controls. Convergence is declared when the true residual
/// norm drops below `max(abs_tol, rel_tol * ||rhs||)`.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_iterations: 50_000, restart: 100 }
    }
}

/// Per-node coefficient offsets into a flat DOF vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub offsets: Vec<usize>,
}

impl Layout {
    pub fn from_maps(maps: &[AngleMap]) -> Layout {
        let mut offsets = Vec::with_capacity(maps.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for m in maps {
            acc += m.function_count();
            offsets.push(acc);
        }
        Layout { offsets }
    }

    pub fn uniform(nodes: usize, block: usize) -> Layout {
        Layout { offsets: (0..=nodes).map(|i| i * block).collect() }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }
}

/// Matrix-free operator interface shared by the two angular discretisations.
pub trait TransportOp {
    fn dim(&self) -> usize;
    /// `out = A x` (forward) or `out = A^T x` (adjoint).
    fn apply(&self, x: &[f64], dir: Dir, out: &mut [f64]);
    /// `out = M^{-1} r` for the per-node block preconditioner. The operator
    /// diagonal is direction-independent.
    fn precondition(&self, r: &[f64], out: &mut [f64]);
    /// Exact diagonal of the discrete operator in its own basis.
    fn diagonal(&self) -> Vec<f64>;
    fn layout(&self) -> &Layout;
    /// Scalar flux (zeroth angular moment) per DG node.
    fn scalar_flux(&self, x: &[f64]) -> Vec<f64>;
    /// Galerkin load vector of the mesh's isotropic region sources.
    fn source_rhs(&self) -> Vec<f64>;
    /// Load vector representing the detector functional's gradient: an
    /// isotropic source of angular density `1/V_D` on the goal region, so the
    /// Euclidean pairing of any field with this vector equals the functional.
    fn adjoint_rhs(&self, goal_region: u32) -> Result<Vec<f64>, TransportError>;
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("field length {got} does not match layout total {expected}")]
    FieldSize { expected: usize, got: usize },
    #[error("goal region {0} is not present in the mesh")]
    UnknownRegion(u32),
    #[error("map count {got} does not match DG node count {expected}")]
    MapCount { expected: usize, got: usize },
}

// ----- shared mesh geometry ------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) struct ElemGeom {
    pub area: f64,
    /// Gradients of the three nodal basis functions.
    pub grad: [[f64; 2]; 3],
    pub region: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Face {
    pub left: u32,
    /// Local vertex indices in the left element of the edge endpoints,
    /// in the element's CCW order.
    pub l_nodes: [u8; 2],
    /// Right element, `u32::MAX` for boundary faces.
    pub right: u32,
    /// Local vertex indices in the right element matching `l_nodes`
    /// endpoint-for-endpoint.
    pub r_nodes: [u8; 2],
    /// Unit normal, outward from the left element.
    pub normal: [f64; 2],
    pub length: f64,
}

pub(crate) const NO_ELEM: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct MeshGeometry {
    pub elems: Vec<ElemGeom>,
    pub faces: Vec<Face>,
}

pub(crate) fn build_geometry(mesh: &TriMesh) -> MeshGeometry {
    let mut elems = Vec::with_capacity(mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p: Vec<[f64; 2]> = tri.v.iter().map(|&v| mesh.vertices[v as usize]).collect();
        let area = mesh.triangle_area(t);
        let d = 2.0 * area;
        let grad = [
            [(p[1][1] - p[2][1]) / d, (p[2][0] - p[1][0]) / d],
            [(p[2][1] - p[0][1]) / d, (p[0][0] - p[2][0]) / d],
            [(p[0][1] - p[1][1]) / d, (p[1][0] - p[0][0]) / d],
        ];
        elems.push(ElemGeom { area, grad, region: tri.region });
    }

    // Edge table: (vmin, vmax) -> (elem, local edge) occurrences.
    let mut table: BTreeMap<(u32, u32), Vec<(u32, u8)>> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3u8 {
            let a = tri.v[e as usize];
            let b = tri.v[(e as usize + 1) % 3];
            table.entry((a.min(b), a.max(b))).or_default().push((t as u32, e));
        }
    }

    let mut faces = Vec::new();
    for ((_a, _b), occ) in table {
        let (t0, e0) = occ[0];
        let tri0 = &mesh.triangles[t0 as usize];
        let va = tri0.v[e0 as usize];
        let vb = tri0.v[(e0 as usize + 1) % 3];
        let pa = mesh.vertices[va as usize];
        let pb = mesh.vertices[vb as usize];
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let length = (dx * dx + dy * dy).sqrt();
        let normal = [dy / length, -dx / length];
        let l_nodes = [e0, (e0 + 1) % 3];
        match occ.len() {
            1 => faces.push(Face { left: t0, l_nodes, right: NO_ELEM, r_nodes: [0, 0], normal, length }),
            2 => {
                let (t1, e1) = occ[1];
                let tri1 = &mesh.triangles[t1 as usize];
                // The right element traverses the shared edge in the opposite
                // direction: its edge start matches the left edge end.
                let r_start = e1;
                let r_end = (e1 + 1) % 3;
                debug_assert_eq!(tri1.v[r_start as usize], vb);
                debug_assert_eq!(tri1.v[r_end as usize], va);
                faces.push(Face {
                    left: t0,
                    l_nodes,
                    right: t1,
                    r_nodes: [r_end, r_start],
                    normal,
                    length,
                });
            }
            n => panic!("non-conforming mesh reached transport: edge shared {n} times"),
        }
    }
    MeshGeometry { elems, faces }
}

// ----- functionals ---------------------------------------------------------

/// Volume of a region.
pub fn region_volume(mesh: &TriMesh, region: u32) -> f64 {
    mesh.region_area(region)
}

/// Average scalar flux over a region: `(1/V_D) int_D phi dV` with exact
/// linear-element quadrature, given per-node scalar fluxes.
pub fn functional_from_scalar_flux(mesh: &TriMesh, phi: &[f64], goal_region: u32) -> Result<f64, TransportError> {
    if !mesh.regions.contains_key(&goal_region) {
        return Err(TransportError::UnknownRegion(goal_region));
    }
    let mut acc = 0.0;
    let mut vol = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.region != goal_region {
            continue;
        }
        let a = mesh.triangle_area(t);
        vol += a;
        let s: f64 = (0..3).map(|k| phi[3 * t + k]).sum();
        acc += a / 3.0 * s;
    }
    Ok(acc / vol)
}

/// Detector functional of a transport field.
pub fn functional<O: TransportOp>(op: &O, mesh: &TriMesh, field: &[f64], goal_region: u32) -> Result<f64, TransportError> {
    if field.len() != op.dim() {
        return Err(TransportError::FieldSize { expected: op.dim(), got: field.len() });
    }
    let phi = op.scalar_flux(field);
    functional_from_scalar_flux(mesh, &phi, goal_region)
}

/// Total angle-integrated source emitted by the mesh regions.
pub fn total_source(mesh: &TriMesh) -> f64 {
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| mesh.triangle_area(t) * mesh.material(tri.region).source * FOUR_PI)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::AngleMap;
    use crate::harmonics::FpnConfig;
    use crate::mesh::{generate_duct, generate_rect, Material};
    use crate::oracle::dense_assemble;
    use crate::sphere::PatchId;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn tiny_mesh() -> TriMesh {
        // 2x1 cells -> 8 triangles, 24 DG nodes.
        generate_rect(1.0, 0.5, 0.51, Material { sigma_t: 2.0, sigma_s: 1.0, source: 0.3 }).unwrap()
    }

    /// Ragged per-node maps so union refinement paths are exercised.
    fn mixed_maps(n_nodes: usize, seed: u64) -> Vec<AngleMap> {
        let mut s = seed;
        (0..n_nodes)
            .map(|n| {
                let mut m = AngleMap::h1(4);
                if n % 3 != 0 {
                    m.refine(&[PatchId::octant((n % 8) as u8)]);
                }
                if n % 3 == 2 {
                    m.refine(&[PatchId { octant: (n % 8) as u8, path: vec![(n % 4) as u8] }]);
                    if splitmix(&mut s) > 0.0 {
                        m.refine(&[PatchId::octant(((n + 3) % 8) as u8)]);
                    }
                }
                m
            })
            .collect()
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n).map(|_| splitmix(&mut s)).collect()
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 5);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let x = vec![0.0; op.dim()];
        let mut y = vec![1.0; op.dim()];
        op.apply(&x, Dir::Forward, &mut y);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_is_linear() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 7);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let a = rand_vec(op.dim(), 1);
        let b = rand_vec(op.dim(), 2);
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 1.7 * x - 0.3 * y).collect();
        let mut ya = vec![0.0; op.dim()];
        let mut yb = vec![0.0; op.dim()];
        let mut yc = vec![0.0; op.dim()];
        op.apply(&a, Dir::Forward, &mut ya);
        op.apply(&b, Dir::Forward, &mut yb);
        op.apply(&combo, Dir::Forward, &mut yc);
        for ((x, y), z) in ya.iter().zip(&yb).zip(&yc) {
            assert!((1.7 * x - 0.3 * y - z).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_adjoint_is_exact_transpose() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 11);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let fwd = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let adj = dense_assemble(&op, &mesh, Dir::Adjoint).unwrap();
        let diff = (&fwd - adj.transpose()).abs().max();
        assert!(diff < 1e-12, "max |A - (A^T)^T| = {diff}");
        // Pairing identity on random vectors.
        let u = rand_vec(op.dim(), 3);
        let v = rand_vec(op.dim(), 4);
        let mut au = vec![0.0; op.dim()];
        let mut atv = vec![0.0; op.dim()];
        op.apply(&u, Dir::Forward, &mut au);
        op.apply(&v, Dir::Adjoint, &mut atv);
        let lhs: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(&atv).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn haar_dense_diagonal_matches_closed_form() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 13);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let dense = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let diag = op.diagonal();
        for i in 0..op.dim() {
            assert!(
                (dense[(i, i)] - diag[i]).abs() < 1e-12,
                "entry {i}: dense {} vs closed-form {}",
                dense[(i, i)],
                diag[i]
            );
        }
    }

    #[test]
    fn fpn_adjoint_is_exact_transpose() {
        let mesh = tiny_mesh();
        let op = FpnOperator::new(&mesh, FpnConfig::new(3, 0.7));
        let fwd = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let adj = dense_assemble(&op, &mesh, Dir::Adjoint).unwrap();
        let diff = (&fwd - adj.transpose()).abs().max();
        assert!(diff < 1e-12, "max |A - (A^T)^T| = {diff}");
    }

    #[test]
    fn fpn_dense_diagonal_matches_closed_form() {
        let mesh = tiny_mesh();
        let op = FpnOperator::new(&mesh, FpnConfig::new(2, 1.3));
        let dense = dense_assemble(&op, &mesh, Dir::Forward).unwrap();
        let diag = op.diagonal();
        for i in 0..op.dim() {
            assert!((dense[(i, i)] - diag[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_mms_linear_vacuum_is_exact() {
        // psi = a + b x + c y, constant in angle. The manufactured streaming
        // source per leaf is b*mx + c*my; the inflow carries the same linear
        // profile. Linear traces and piecewise-constant angle lie in the trial
        // space, so the discrete solution is exact.
        let mesh = generate_rect(1.0, 1.0, 0.34, Material::VACUUM).unwrap();
        let n_nodes = 3 * mesh.triangles.len();
        let maps: Vec<AngleMap> = mixed_maps(n_nodes, 17);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let (a, b, c) = (0.8, 0.45, -0.3);
        let lin = |p: [f64; 2]| a + b * p[0] + c * p[1];
        let mut rhs = op.angular_load_rhs(|patch| {
            let m = patch.moment_xy();
            b * m[0] + c * m[1]
        });
        for (r, g) in rhs.iter_mut().zip(op.inflow_rhs(|pos, _| lin(pos))) {
            *r += g;
        }
        // Solve essentially to machine precision: exactness of the discrete
        // solution is the property under test, so solver error must not mask it.
        let opts = SolveOptions { abs_tol: 1e-13, rel_tol: 1e-13, restart: 60, ..Default::default() };
        let (x, stats) = solve(&op, &rhs, Dir::Forward, &opts).unwrap();
        // Expected: every leaf of node i carries lin(pos_i).
        let mut worst = 0.0f64;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for li in 0..3 {
                let node = 3 * t + li;
                let pos = mesh.vertices[tri.v[li] as usize];
                let r = op.layout().range(node);
                let mut leaves = vec![0.0; r.len()];
                maps[node].reconstruct_into(&x[r], &mut leaves);
                for v in leaves {
                    worst = worst.max((v - lin(pos)).abs());
                }
            }
        }
        assert!(worst < 1e-11, "worst nodal error {worst} after {} iterations", stats.iterations);
    }

    #[test]
    fn infinite_medium_balance_haar() {
        // Uniform medium, sigma_t = 2, sigma_s = 1, unit angle-integrated
        // source; manufactured inflow completes the infinite medium, so
        // psi = 1/(4 pi) and the scalar flux is S/(sigma_t - sigma_s) = 1.
        let mesh = generate_rect(1.0, 1.0, 0.51, Material { sigma_t: 2.0, sigma_s: 1.0, source: 1.0 / FOUR_PI }).unwrap();
        let maps = mixed_maps(3 * mesh.triangles.len(), 19);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let mut rhs = op.source_rhs();
        for (r, g) in rhs.iter_mut().zip(op.inflow_rhs(|_, _| 1.0 / FOUR_PI)) {
            *r += g;
        }
        let (x, _) = solve(&op, &rhs, Dir::Forward, &SolveOptions::default()).unwrap();
        for phi in op.scalar_flux(&x) {
            assert!((phi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn infinite_medium_balance_fpn() {
        let mesh = generate_rect(1.0, 1.0, 0.51, Material { sigma_t: 2.0, sigma_s: 1.0, source: 1.0 / FOUR_PI }).unwrap();
        let cfg = FpnConfig::new(3, 0.9);
        let op = FpnOperator::new(&mesh, cfg);
        let mut rhs = op.source_rhs();
        let block = cfg.function_count();
        let iso = {
            // Constant 1/(4 pi) expands as c00 = 1/sqrt(4 pi).
            let mut c = vec![0.0; block];
            c[0] = 1.0 / FOUR_PI.sqrt();
            c
        };
        for (r, g) in rhs.iter_mut().zip(op.inflow_rhs(|_| iso.clone())) {
            *r += g;
        }
        let (x, _) = solve(&op, &rhs, Dir::Forward, &SolveOptions::default()).unwrap();
        for phi in op.scalar_flux(&x) {
            assert!((phi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn duality_of_forward_and_adjoint_solves() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let maps: Vec<AngleMap> = (0..3 * mesh.triangles.len()).map(|_| AngleMap::uniform(1, 4)).collect();
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let q = op.source_rhs();
        let qstar = op.adjoint_rhs(crate::mesh::REGION_DETECTOR).unwrap();
        // The duality gap is bounded by the solve residuals times the
        // opposite solution norms, so the solves must be well below the
        // asserted bound of 10 * 1e-10 * |F|.
        let opts = SolveOptions { abs_tol: 1e-13, rel_tol: 1e-13, ..Default::default() };
        let (psi, _) = solve(&op, &q, Dir::Forward, &opts).unwrap();
        let (psi_star, _) = solve(&op, &qstar, Dir::Adjoint, &opts).unwrap();
        let f = functional(&op, &mesh, &psi, crate::mesh::REGION_DETECTOR).unwrap();
        let pairing: f64 = psi_star.iter().zip(&q).map(|(a, b)| a * b).sum();
        assert!((f - pairing).abs() <= 10.0 * 1e-10 * f.abs().max(1e-30), "F = {f}, <psi*, q> = {pairing}");
        // The adjoint load is the functional gradient for any field.
        let z = rand_vec(op.dim(), 5);
        let fz = functional(&op, &mesh, &z, crate::mesh::REGION_DETECTOR).unwrap();
        let gz: f64 = z.iter().zip(&qstar).map(|(a, b)| a * b).sum();
        assert!((fz - gz).abs() < 1e-12 * fz.abs().max(1.0));
    }

    #[test]
    fn vacuum_particle_balance() {
        let mesh = generate_duct(4.0, 1.0, 0.5).unwrap();
        let maps: Vec<AngleMap> = (0..3 * mesh.triangles.len()).map(|_| AngleMap::uniform(1, 4)).collect();
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let q = op.source_rhs();
        let (x, _) = solve(&op, &q, Dir::Forward, &SolveOptions::default()).unwrap();
        let outflow = op.boundary_outflow(&x);
        let emitted = total_source(&mesh);
        assert!((outflow - emitted).abs() < 1e-8 * emitted, "outflow {outflow} vs source {emitted}");
    }

    #[test]
    fn solutions_inherit_mirror_symmetry() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let n_nodes = 3 * mesh.triangles.len();
        // Mirror-symmetric ragged maps: refine an upper-octant patch and its
        // mirror image everywhere.
        let maps: Vec<AngleMap> = (0..n_nodes)
            .map(|n| {
                let mut m = AngleMap::h1(4);
                let o = (n % 4) as u8;
                m.refine(&[PatchId::octant(o), PatchId::octant(o + 4)]);
                m.refine(&[
                    PatchId { octant: o, path: vec![1] },
                    PatchId { octant: o + 4, path: vec![3] },
                ]);
                m
            })
            .collect();
        for m in &maps {
            assert!(m.same_structure(&m.mirrored()));
        }
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let q = op.source_rhs();
        let (x, _) = solve(&op, &q, Dir::Forward, &SolveOptions::default()).unwrap();
        // Values on mirrored leaves agree.
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for n in 0..n_nodes {
            let r = op.layout().range(n);
            let mut leaves = vec![0.0; r.len()];
            maps[n].reconstruct_into(&x[r], &mut leaves);
            let patches = maps[n].leaf_patches();
            let mirrored = maps[n].mirrored();
            let m_patches = mirrored.leaf_patches();
            for (p, v) in patches.iter().zip(&leaves) {
                scale = scale.max(v.abs());
                let c = p.centroid();
                let mc = crate::sphere::Direction::new(c.phi, -c.mu);
                let idx = m_patches
                    .iter()
                    .position(|q| q.contains(&mc) && q.level == p.level)
                    .unwrap();
                worst = worst.max((v - leaves[idx]).abs());
            }
        }
        assert!(worst < 1e-11 * scale.max(1.0), "asymmetry {worst}, scale {scale}");
    }

    #[test]
    fn solve_recovers_known_field() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 23);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        let truth = rand_vec(op.dim(), 9);
        let mut rhs = vec![0.0; op.dim()];
        op.apply(&truth, Dir::Forward, &mut rhs);
        let (x, _) = solve(&op, &rhs, Dir::Forward, &SolveOptions::default()).unwrap();
        let err: f64 = x
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "recovery error {err}");
    }

    #[test]
    fn unknown_region_is_an_error() {
        let mesh = tiny_mesh();
        let maps = mixed_maps(3 * mesh.triangles.len(), 29);
        let op = HaarOperator::new(&mesh, &maps).unwrap();
        assert!(op.adjoint_rhs(99).is_err());
        let x = vec![0.0; op.dim()];
        assert!(functional(&op, &mesh, &x, 99).is_err());
    }
}
