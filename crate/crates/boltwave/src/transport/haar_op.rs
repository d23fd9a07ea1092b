//! Matrix-free transport operator in the adaptive Haar angular basis.
//!
//! Application is the Galerkin sandwich `R^T L R`: reconstruct every node's
//! coefficients to effective-leaf values, apply the piecewise-constant-in-
//! angle operator `L` in leaf space, and restrict back with the transposed
//! reconstruction. Where neighbouring nodes carry different angle maps, `L`
//! is evaluated on the union refinement of their leaf sets: prolongation is
//! injection (exact for piecewise constants), restriction is the accumulation
//! performed by the transposed transform.

use super::{
    build_geometry, Dir, Face, Layout, MeshGeometry, TransportError, TransportOp, NO_ELEM,
};
use crate::haar::{AngleMap, Tree};
use crate::mesh::{Material, TriMesh};
use crate::sphere::{base_octants, SpherePatch, FOUR_PI};

/// Per-element and per-face union-leaf tables, built once per (mesh, maps)
/// pair and reused across operator applications.
struct HaarPlan {
    vol_first: Vec<u32>,
    vol_owner: Vec<[u32; 3]>,
    vol_mx: Vec<f64>,
    vol_my: Vec<f64>,
    vol_area: Vec<f64>,
    face_first: Vec<u32>,
    face_owner: Vec<[u32; 4]>,
    face_plus: Vec<f64>,
    face_minus: Vec<f64>,
}

pub struct HaarOperator<'a> {
    mesh: &'a TriMesh,
    maps: &'a [AngleMap],
    layout: Layout,
    geom: MeshGeometry,
    materials: Vec<Material>,
    plan: HaarPlan,
    diag: Vec<f64>,
    /// Inverse of the leaf-space node-block diagonal. The per-node block of
    /// the operator is R^T D R with D diagonal in leaf space (scattering
    /// aside), so its exact inverse is the O(n) sandwich
    /// `decompose . D^{-1} . decompose^T`.
    inv_leaf_diag: Vec<f64>,
}

/// Walk the union refinement of up to `K` trees rooted at the same octant,
/// emitting each union leaf with the owning canonical leaf index per input.
fn union_walk<const K: usize>(
    trees: [&Tree; K],
    leaf_tabs: [&[u32]; K],
    bases: [u32; K],
    patch: SpherePatch,
    emit: &mut impl FnMut(&SpherePatch, [u32; K]),
) {
    // state per input: (node index, descended-past-leaf flag)
    fn rec<const K: usize>(
        trees: [&Tree; K],
        leaf_tabs: [&[u32]; K],
        bases: [u32; K],
        states: [(u32, bool); K],
        patch: SpherePatch,
        emit: &mut impl FnMut(&SpherePatch, [u32; K]),
    ) {
        let mut all_leaf = true;
        for k in 0..K {
            let (n, fixed) = states[k];
            if !fixed && !trees[k].is_leaf(n) {
                all_leaf = false;
                break;
            }
        }
        if all_leaf {
            let mut owners = [0u32; K];
            for k in 0..K {
                owners[k] = bases[k] + leaf_tabs[k][states[k].0 as usize];
            }
            emit(&patch, owners);
            return;
        }
        let kids = patch.children();
        for c in 0..4u32 {
            let mut next = states;
            for (k, item) in next.iter_mut().enumerate() {
                let (n, fixed) = *item;
                if !fixed && !trees[k].is_leaf(n) {
                    *item = (trees[k].children_of(n) + c, false);
                } else {
                    *item = (n, true);
                }
            }
            rec(trees, leaf_tabs, bases, next, kids[c as usize], emit);
        }
    }
    rec(trees, leaf_tabs, bases, [(0, false); K], patch, emit);
}

impl<'a> HaarOperator<'a> {
    pub fn new(mesh: &'a TriMesh, maps: &'a [AngleMap]) -> Result<Self, TransportError> {
        let n_nodes = 3 * mesh.triangles.len();
        if maps.len() != n_nodes {
            return Err(TransportError::MapCount { expected: n_nodes, got: maps.len() });
        }
        let layout = Layout::from_maps(maps);
        let geom = build_geometry(mesh);
        let materials: Vec<Material> =
            geom.elems.iter().map(|e| mesh.material(e.region)).collect();

        // Per-node canonical leaf tables.
        let leaf_tabs: Vec<[Vec<u32>; 8]> = maps
            .iter()
            .map(|m| std::array::from_fn(|o| m.tree(o).leaf_starts()))
            .collect();
        let leaf_offsets: Vec<[u32; 9]> = maps.iter().map(|m| m.octant_leaf_offsets()).collect();
        let octs = base_octants();

        // Volume plan.
        let mut vol_first = Vec::with_capacity(geom.elems.len() + 1);
        let mut vol_owner = Vec::new();
        let mut vol_mx = Vec::new();
        let mut vol_my = Vec::new();
        let mut vol_area = Vec::new();
        vol_first.push(0u32);
        for t in 0..geom.elems.len() {
            let nodes = [3 * t, 3 * t + 1, 3 * t + 2];
            for o in 0..8 {
                let trees = std::array::from_fn(|k| maps[nodes[k]].tree(o));
                let tabs = std::array::from_fn(|k| leaf_tabs[nodes[k]][o].as_slice());
                let bases = std::array::from_fn(|k| {
                    layout.offsets[nodes[k]] as u32 + leaf_offsets[nodes[k]][o]
                });
                union_walk::<3>(trees, tabs, bases, octs[o], &mut |p, owners| {
                    let m = p.moment_xy();
                    vol_owner.push(owners);
                    vol_mx.push(m[0]);
                    vol_my.push(m[1]);
                    vol_area.push(p.area());
                });
            }
            vol_first.push(vol_owner.len() as u32);
        }

        // Face plan.
        let mut face_first = Vec::with_capacity(geom.faces.len() + 1);
        let mut face_owner = Vec::new();
        let mut face_plus = Vec::new();
        let mut face_minus = Vec::new();
        face_first.push(0u32);
        for f in &geom.faces {
            let la = 3 * f.left as usize + f.l_nodes[0] as usize;
            let lb = 3 * f.left as usize + f.l_nodes[1] as usize;
            if f.right == NO_ELEM {
                for o in 0..8 {
                    let trees = std::array::from_fn(|k| maps[[la, lb][k]].tree(o));
                    let tabs = std::array::from_fn(|k| leaf_tabs[[la, lb][k]][o].as_slice());
                    let bases = std::array::from_fn(|k| {
                        layout.offsets[[la, lb][k]] as u32 + leaf_offsets[[la, lb][k]][o]
                    });
                    union_walk::<2>(trees, tabs, bases, octs[o], &mut |p, owners| {
                        let (plus, minus) = p.half_range_flux(f.normal);
                        face_owner.push([owners[0], owners[1], u32::MAX, u32::MAX]);
                        face_plus.push(plus);
                        face_minus.push(minus);
                    });
                }
            } else {
                let ra = 3 * f.right as usize + f.r_nodes[0] as usize;
                let rb = 3 * f.right as usize + f.r_nodes[1] as usize;
                let quad = [la, lb, ra, rb];
                for o in 0..8 {
                    let trees = std::array::from_fn(|k| maps[quad[k]].tree(o));
                    let tabs = std::array::from_fn(|k| leaf_tabs[quad[k]][o].as_slice());
                    let bases = std::array::from_fn(|k| {
                        layout.offsets[quad[k]] as u32 + leaf_offsets[quad[k]][o]
                    });
                    union_walk::<4>(trees, tabs, bases, octs[o], &mut |p, owners| {
                        let (plus, minus) = p.half_range_flux(f.normal);
                        face_owner.push(owners);
                        face_plus.push(plus);
                        face_minus.push(minus);
                    });
                }
            }
            face_first.push(face_owner.len() as u32);
        }

        let plan = HaarPlan {
            vol_first,
            vol_owner,
            vol_mx,
            vol_my,
            vol_area,
            face_first,
            face_owner,
            face_plus,
            face_minus,
        };
        let mut op = HaarOperator {
            mesh,
            maps,
            layout,
            geom,
            materials,
            plan,
            diag: Vec::new(),
            inv_leaf_diag: Vec::new(),
        };
        op.diag = op.compute_diagonal();
        op.inv_leaf_diag = op.compute_inv_leaf_diag();
        Ok(op)
    }

    /// Inverse leaf-space diagonal of each node block: streaming self,
    /// removal, and the outflow stabilisation on the node's own faces. Tiny
    /// entries are floored; upwind dissipativity keeps the true values
    /// non-negative.
    fn compute_inv_leaf_diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.layout.total()];
        let mut elem_faces: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.geom.elems.len()];
        for (fi, f) in self.geom.faces.iter().enumerate() {
            elem_faces[f.left as usize].push((fi, true));
            if f.right != NO_ELEM {
                elem_faces[f.right as usize].push((fi, false));
            }
        }
        for t in 0..self.geom.elems.len() {
            let elem = &self.geom.elems[t];
            let mat = &self.materials[t];
            let a = elem.area;
            for li in 0..3usize {
                let node = 3 * t + li;
                let faces: Vec<(&Face, bool)> = elem_faces[t]
                    .iter()
                    .filter(|&&(fi, is_left)| {
                        let f = &self.geom.faces[fi];
                        let locals = if is_left { f.l_nodes } else { f.r_nodes };
                        locals[0] as usize == li || locals[1] as usize == li
                    })
                    .map(|&(fi, is_left)| (&self.geom.faces[fi], is_left))
                    .collect();
                let base = self.layout.offsets[node];
                let patches = self.maps[node].leaf_patches();
                for (k, p) in patches.iter().enumerate() {
                    let m = p.moment_xy();
                    let mut v = -(a / 3.0) * (elem.grad[li][0] * m[0] + elem.grad[li][1] * m[1])
                        + mat.sigma_t * (a / 6.0) * p.area();
                    for (f, is_left) in &faces {
                        let (plus, minus) = p.half_range_flux(f.normal);
                        v += f.length / 3.0 * if *is_left { plus } else { -minus };
                    }
                    d[base + k] = v;
                }
            }
        }
        let floor = 1e-13 * d.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        d.iter().map(|&v| 1.0 / v.max(floor.max(f64::MIN_POSITIVE))).collect()
    }

    pub fn maps(&self) -> &[AngleMap] {
        self.maps
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    /// Leaf values of every node (the `R x` stage), canonical layout.
    fn reconstruct_all(&self, x: &[f64], v: &mut [f64]) {
        for n in 0..self.layout.node_count() {
            let r = self.layout.range(n);
            self.maps[n].reconstruct_into(&x[r.clone()], &mut v[r]);
        }
    }

    /// `R^T w` stage into the output coefficient vector.
    fn restrict_all(&self, w: &[f64], out: &mut [f64]) {
        for n in 0..self.layout.node_count() {
            let r = self.layout.range(n);
            self.maps[n].mallat_inverse_t(&w[r.clone()], &mut out[r]);
        }
    }

    fn leaf_operator(&self, v: &[f64], phi: &[f64], dir: Dir, w: &mut [f64]) {
        let pl = &self.plan;
        // Volume terms.
        for (t, elem) in self.geom.elems.iter().enumerate() {
            let mat = &self.materials[t];
            let a = elem.area;
            let third = a / 3.0;
            let a12 = a / 12.0;
            let scat = mat.sigma_s / FOUR_PI;
            let g = &elem.grad;
            let phis = [phi[3 * t], phi[3 * t + 1], phi[3 * t + 2]];
            let phi_sum = phis[0] + phis[1] + phis[2];
            let lo = pl.vol_first[t] as usize;
            let hi = pl.vol_first[t + 1] as usize;
            for u in lo..hi {
                let ow = pl.vol_owner[u];
                let vals = [v[ow[0] as usize], v[ow[1] as usize], v[ow[2] as usize]];
                let tsum = vals[0] + vals[1] + vals[2];
                let (mx, my) = (pl.vol_mx[u], pl.vol_my[u]);
                let area = pl.vol_area[u];
                match dir {
                    Dir::Forward => {
                        for i in 0..3 {
                            let gm = g[i][0] * mx + g[i][1] * my;
                            w[ow[i] as usize] += -third * gm * tsum
                                + mat.sigma_t * a12 * area * (tsum + vals[i])
                                - scat * a12 * area * (phi_sum + phis[i]);
                        }
                    }
                    Dir::Adjoint => {
                        let mut sg = 0.0;
                        for i in 0..3 {
                            sg += (g[i][0] * mx + g[i][1] * my) * vals[i];
                        }
                        for i in 0..3 {
                            w[ow[i] as usize] += -third * sg
                                + mat.sigma_t * a12 * area * (tsum + vals[i])
                                - scat * a12 * area * (phi_sum + phis[i]);
                        }
                    }
                }
            }
        }

        // Face terms.
        for (fi, f) in self.geom.faces.iter().enumerate() {
            let e1 = f.length / 6.0;
            let e2 = f.length / 3.0;
            let lo = pl.face_first[fi] as usize;
            let hi = pl.face_first[fi + 1] as usize;
            if f.right == NO_ELEM {
                for u in lo..hi {
                    let ow = pl.face_owner[u];
                    let p = pl.face_plus[u];
                    let (vla, vlb) = (v[ow[0] as usize], v[ow[1] as usize]);
                    // Outflow only; vacuum inflow contributes nothing. The
                    // boundary block is symmetric, so both directions agree.
                    let fa = p * vla;
                    let fb = p * vlb;
                    w[ow[0] as usize] += e2 * fa + e1 * fb;
                    w[ow[1] as usize] += e1 * fa + e2 * fb;
                }
            } else {
                match dir {
                    Dir::Forward => {
                        for u in lo..hi {
                            let ow = pl.face_owner[u];
                            let p = pl.face_plus[u];
                            let m = pl.face_minus[u];
                            let fa = p * v[ow[0] as usize] + m * v[ow[2] as usize];
                            let fb = p * v[ow[1] as usize] + m * v[ow[3] as usize];
                            let qa = e2 * fa + e1 * fb;
                            let qb = e1 * fa + e2 * fb;
                            w[ow[0] as usize] += qa;
                            w[ow[1] as usize] += qb;
                            w[ow[2] as usize] -= qa;
                            w[ow[3] as usize] -= qb;
                        }
                    }
                    Dir::Adjoint => {
                        for u in lo..hi {
                            let ow = pl.face_owner[u];
                            let p = pl.face_plus[u];
                            let m = pl.face_minus[u];
                            let ga = v[ow[0] as usize] - v[ow[2] as usize];
                            let gb = v[ow[1] as usize] - v[ow[3] as usize];
                            let qa = e2 * ga + e1 * gb;
                            let qb = e1 * ga + e2 * gb;
                            w[ow[0] as usize] += p * qa;
                            w[ow[1] as usize] += p * qb;
                            w[ow[2] as usize] += m * qa;
                            w[ow[3] as usize] += m * qb;
                        }
                    }
                }
            }
        }
    }

    /// Exact diagonal of the coefficient-space operator. Every non-scatter
    /// term is angular-diagonal at union-leaf granularity and additive over
    /// patches, so each function's diagonal entry is the same closed form
    /// evaluated on its support patch; the scattering rank-one term touches
    /// only scaling functions because wavelets integrate to zero.
    fn compute_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.layout.total()];
        // Faces adjacent to each element, with side flags.
        let mut elem_faces: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.geom.elems.len()];
        for (fi, f) in self.geom.faces.iter().enumerate() {
            elem_faces[f.left as usize].push((fi, true));
            if f.right != NO_ELEM {
                elem_faces[f.right as usize].push((fi, false));
            }
        }
        for t in 0..self.geom.elems.len() {
            let elem = &self.geom.elems[t];
            let mat = &self.materials[t];
            let a = elem.area;
            for li in 0..3usize {
                let node = 3 * t + li;
                let supports = self.maps[node].coeff_supports();
                let scaling = self.maps[node].scaling_positions();
                let base = self.layout.offsets[node];
                for (ci, p) in supports.iter().enumerate() {
                    let m = p.moment_xy();
                    let mut d = -(a / 3.0) * (elem.grad[li][0] * m[0] + elem.grad[li][1] * m[1])
                        + mat.sigma_t * (a / 6.0) * p.area();
                    for &(fi, is_left) in &elem_faces[t] {
                        let f: &Face = &self.geom.faces[fi];
                        let locals = if is_left { f.l_nodes } else { f.r_nodes };
                        if locals[0] as usize != li && locals[1] as usize != li {
                            continue;
                        }
                        let (plus, minus) = p.half_range_flux(f.normal);
                        let outflow = if is_left { plus } else { -minus };
                        d += f.length / 3.0 * outflow;
                    }
                    if scaling.contains(&ci) {
                        let integral = p.area();
                        d -= mat.sigma_s / FOUR_PI * (a / 6.0) * integral * integral;
                    }
                    diag[base + ci] = d;
                }
            }
        }
        diag
    }

    /// Assemble the load vector for manufactured inflow data `g(x, patch)`
    /// on the outer boundary (the value is the patch mean of the inflow).
    pub fn inflow_rhs(&self, g: impl Fn([f64; 2], &SpherePatch) -> f64) -> Vec<f64> {
        let octs = base_octants();
        let mut leaf_rhs = vec![0.0; self.layout.total()];
        let leaf_tabs: Vec<[Vec<u32>; 8]> = self
            .maps
            .iter()
            .map(|m| std::array::from_fn(|o| m.tree(o).leaf_starts()))
            .collect();
        let leaf_offsets: Vec<[u32; 9]> = self.maps.iter().map(|m| m.octant_leaf_offsets()).collect();
        for f in &self.geom.faces {
            if f.right != NO_ELEM {
                continue;
            }
            let la = 3 * f.left as usize + f.l_nodes[0] as usize;
            let lb = 3 * f.left as usize + f.l_nodes[1] as usize;
            let tri = &self.mesh.triangles[f.left as usize];
            let pa = self.mesh.vertices[tri.v[f.l_nodes[0] as usize] as usize];
            let pb = self.mesh.vertices[tri.v[f.l_nodes[1] as usize] as usize];
            let e1 = f.length / 6.0;
            let e2 = f.length / 3.0;
            for o in 0..8 {
                let trees = std::array::from_fn(|k| self.maps[[la, lb][k]].tree(o));
                let tabs = std::array::from_fn(|k| leaf_tabs[[la, lb][k]][o].as_slice());
                let bases = std::array::from_fn(|k| {
                    self.layout.offsets[[la, lb][k]] as u32 + leaf_offsets[[la, lb][k]][o]
                });
                union_walk::<2>(trees, tabs, bases, octs[o], &mut |p, owners| {
                    let (_, minus) = p.half_range_flux(f.normal);
                    if minus == 0.0 {
                        return;
                    }
                    let ga = g(pa, p);
                    let gb = g(pb, p);
                    // Inflow moves to the right-hand side with opposite sign.
                    leaf_rhs[owners[0] as usize] -= minus * (e2 * ga + e1 * gb);
                    leaf_rhs[owners[1] as usize] -= minus * (e1 * ga + e2 * gb);
                });
            }
        }
        let mut out = vec![0.0; self.layout.total()];
        self.restrict_all(&leaf_rhs, &mut out);
        out
    }

    /// Total outflow through the outer boundary carried by a field.
    pub fn boundary_outflow(&self, x: &[f64]) -> f64 {
        let mut v = vec![0.0; self.layout.total()];
        self.reconstruct_all(x, &mut v);
        let pl = &self.plan;
        let mut total = 0.0;
        for (fi, f) in self.geom.faces.iter().enumerate() {
            if f.right != NO_ELEM {
                continue;
            }
            let half = f.length / 2.0;
            for u in pl.face_first[fi] as usize..pl.face_first[fi + 1] as usize {
                let ow = pl.face_owner[u];
                total += pl.face_plus[u] * half * (v[ow[0] as usize] + v[ow[1] as usize]);
            }
        }
        total
    }

    /// Load vector for a spatially constant source with the given angular
    /// patch integrals: rhs entry (node, leaf p) = (A/3) * f(p) where
    /// `f(p) = int_p S(Omega) dOmega`. Used by manufactured-solution tests.
    pub fn angular_load_rhs(&self, f: impl Fn(&SpherePatch) -> f64) -> Vec<f64> {
        let mut leaf_rhs = vec![0.0; self.layout.total()];
        for (t, elem) in self.geom.elems.iter().enumerate() {
            let third = elem.area / 3.0;
            for li in 0..3 {
                let node = 3 * t + li;
                let r = self.layout.range(node);
                let patches = self.maps[node].leaf_patches();
                for (slot, p) in r.zip(&patches) {
                    leaf_rhs[slot] = third * f(p);
                }
            }
        }
        let mut out = vec![0.0; self.layout.total()];
        self.restrict_all(&leaf_rhs, &mut out);
        out
    }

    fn isotropic_rhs(&self, density: impl Fn(u32) -> f64) -> Vec<f64> {
        let mut leaf_rhs = vec![0.0; self.layout.total()];
        for (t, elem) in self.geom.elems.iter().enumerate() {
            let q = density(elem.region);
            if q == 0.0 {
                continue;
            }
            let third = elem.area / 3.0;
            for li in 0..3 {
                let node = 3 * t + li;
                let r = self.layout.range(node);
                let patches = self.maps[node].leaf_patches();
                for (slot, p) in r.zip(&patches) {
                    leaf_rhs[slot] = q * third * p.area();
                }
            }
        }
        let mut out = vec![0.0; self.layout.total()];
        self.restrict_all(&leaf_rhs, &mut out);
        out
    }
}

impl TransportOp for HaarOperator<'_> {
    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn apply(&self, x: &[f64], dir: Dir, out: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let mut v = vec![0.0; self.dim()];
        self.reconstruct_all(x, &mut v);
        let phi: Vec<f64> = (0..self.layout.node_count())
            .map(|n| self.maps[n].scalar_flux_of(&x[self.layout.range(n)]))
            .collect();
        let mut w = vec![0.0; self.dim()];
        self.leaf_operator(&v, &phi, dir, &mut w);
        self.restrict_all(&w, out);
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        // Exact node-block solve: z = F (D^{-1} (F^T r)) with F the forward
        // Mallat transform, since the block is R^T D R and F = R^{-1}.
        let mut tmp = vec![0.0; self.dim()];
        for n in 0..self.layout.node_count() {
            let rng = self.layout.range(n);
            self.maps[n].mallat_forward_t(&r[rng.clone()], &mut tmp[rng]);
        }
        for (t, d) in tmp.iter_mut().zip(&self.inv_leaf_diag) {
            *t *= d;
        }
        for n in 0..self.layout.node_count() {
            let rng = self.layout.range(n);
            self.maps[n].decompose_into(&tmp[rng.clone()], &mut out[rng]);
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn scalar_flux(&self, x: &[f64]) -> Vec<f64> {
        (0..self.layout.node_count())
            .map(|n| self.maps[n].scalar_flux_of(&x[self.layout.range(n)]))
            .collect()
    }

    fn source_rhs(&self) -> Vec<f64> {
        self.isotropic_rhs(|region| self.mesh.material(region).source)
    }

    fn adjoint_rhs(&self, goal_region: u32) -> Result<Vec<f64>, TransportError> {
        if !self.mesh.regions.contains_key(&goal_region) {
            return Err(TransportError::UnknownRegion(goal_region));
        }
        let vol = self.mesh.region_area(goal_region);
        Ok(self.isotropic_rhs(|region| if region == goal_region { 1.0 / vol } else { 0.0 }))
    }
}
