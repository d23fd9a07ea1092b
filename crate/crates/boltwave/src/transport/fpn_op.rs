//! Matrix-free transport operator in the filtered spherical-harmonics basis.
//!
//! Every DG node carries the same `(N+1)^2` coefficient block. Streaming uses
//! the sparse moment matrices, interior faces a global Lax-Friedrichs flux
//! with wave speed 1, and the filter enters as per-degree removal alongside
//! the total cross-section.

use super::{build_geometry, Dir, Layout, MeshGeometry, TransportError, TransportOp, NO_ELEM};
use crate::harmonics::{filter_coeff_with, moment_matrices, FpnConfig, HarmonicIndex, MomentMatrices};
use crate::mesh::{Material, TriMesh};
use crate::sphere::FOUR_PI;
use std::collections::HashMap;

pub struct FpnOperator<'a> {
    mesh: &'a TriMesh,
    config: FpnConfig,
    block: usize,
    layout: Layout,
    geom: MeshGeometry,
    materials: Vec<Material>,
    moments: MomentMatrices,
    /// Per-degree removal added by the filter, indexed by flat harmonic.
    filter_diag: Vec<f64>,
    diag: Vec<f64>,
    /// Block-Jacobi: per-node factorised angular blocks. Structured meshes
    /// repeat the same few blocks, so factorisations are shared.
    node_block: Vec<u32>,
    block_lu: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> FpnOperator<'a> {
    pub fn new(mesh: &'a TriMesh, config: FpnConfig) -> Self {
        let block = config.function_count();
        let n_nodes = 3 * mesh.triangles.len();
        let layout = Layout::uniform(n_nodes, block);
        let geom = build_geometry(mesh);
        let materials: Vec<Material> =
            geom.elems.iter().map(|e| mesh.material(e.region)).collect();
        let moments = moment_matrices(config.order);
        let filter_diag: Vec<f64> = (0..block)
            .map(|a| {
                let l = HarmonicIndex::from_flat(a).l;
                filter_coeff_with(config.filter, l, config.order, config.sigma_f)
            })
            .collect();

        let mut op = FpnOperator {
            mesh,
            config,
            block,
            layout,
            geom,
            materials,
            moments,
            filter_diag,
            diag: Vec::new(),
            node_block: Vec::new(),
            block_lu: Vec::new(),
        };
        op.diag = op.compute_diagonal();
        op.build_block_jacobi();
        op
    }

    /// Assemble and factorise each node's angular self-block (streaming self
    /// term, removal, filter, scattering, and the stabilised flux terms of
    /// its own faces), sharing factorisations between nodes whose geometry
    /// keys agree.
    fn build_block_jacobi(&mut self) {
        let m = self.block;
        let mut elem_faces: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.geom.elems.len()];
        for (fi, f) in self.geom.faces.iter().enumerate() {
            elem_faces[f.left as usize].push((fi, true));
            if f.right != NO_ELEM {
                elem_faces[f.right as usize].push((fi, false));
            }
        }
        let mut keys: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut node_block = vec![0u32; self.layout.node_count()];
        let mut lus = Vec::new();
        for t in 0..self.geom.elems.len() {
            let elem = &self.geom.elems[t];
            for li in 0..3usize {
                let node = 3 * t + li;
                let mut edges: Vec<(f64, [f64; 2], bool)> = Vec::new();
                for &(fi, is_left) in &elem_faces[t] {
                    let f = &self.geom.faces[fi];
                    let locals = if is_left { f.l_nodes } else { f.r_nodes };
                    if locals[0] as usize == li || locals[1] as usize == li {
                        edges.push((f.length, f.normal, is_left));
                    }
                }
                let mut key: Vec<u64> = vec![
                    elem.area.to_bits(),
                    elem.grad[li][0].to_bits(),
                    elem.grad[li][1].to_bits(),
                    elem.region as u64,
                ];
                let mut edge_keys: Vec<[u64; 4]> = edges
                    .iter()
                    .map(|(len, n, left)| [len.to_bits(), n[0].to_bits(), n[1].to_bits(), *left as u64])
                    .collect();
                edge_keys.sort_unstable();
                for e in edge_keys {
                    key.extend_from_slice(&e);
                }
                let next = lus.len() as u32;
                let idx = *keys.entry(key).or_insert(next);
                if idx == next {
                    lus.push(nalgebra::LU::new(self.assemble_node_block(t, li, &edges, m)));
                }
                node_block[node] = idx;
            }
        }
        self.node_block = node_block;
        self.block_lu = lus;
    }

    fn assemble_node_block(
        &self,
        t: usize,
        li: usize,
        edges: &[(f64, [f64; 2], bool)],
        m: usize,
    ) -> nalgebra::DMatrix<f64> {
        let elem = &self.geom.elems[t];
        let mat = &self.materials[t];
        let a = elem.area;
        let mut b = nalgebra::DMatrix::zeros(m, m);
        for k in 0..m {
            b[(k, k)] = a / 6.0 * (mat.sigma_t + self.filter_diag[k]);
        }
        b[(0, 0)] -= a / 6.0 * mat.sigma_s;
        // Streaming self term -(A/3) grad_i . (Mx, My).
        let add_mn = |b: &mut nalgebra::DMatrix<f64>, n: [f64; 2], s: f64| {
            for (csr, comp) in [(&self.moments.mx, n[0]), (&self.moments.my, n[1])] {
                if comp == 0.0 {
                    continue;
                }
                for r in 0..m {
                    for k in csr.indptr[r] as usize..csr.indptr[r + 1] as usize {
                        b[(r, csr.cols[k] as usize)] += s * comp * csr.vals[k];
                    }
                }
            }
        };
        add_mn(&mut b, elem.grad[li], -a / 3.0);
        // Face flux self blocks: left side (len/3) (Mn + I)/2, right side
        // (len/3) (I - Mn)/2.
        for (len, n, is_left) in edges {
            let w = len / 3.0 * 0.5;
            let sign = if *is_left { 1.0 } else { -1.0 };
            add_mn(&mut b, *n, w * sign);
            for k in 0..m {
                b[(k, k)] += w;
            }
        }
        b
    }

    pub fn config(&self) -> &FpnConfig {
        &self.config
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    /// `out_slice += s * Mn x` where `Mn = nx Mx + ny My`.
    fn mn_mul_add(&self, n: [f64; 2], x: &[f64], out: &mut [f64], s: f64) {
        self.moments.mx.mul_add(x, out, s * n[0]);
        self.moments.my.mul_add(x, out, s * n[1]);
    }

    fn compute_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.layout.total()];
        let mut edge_len: Vec<[f64; 3]> = vec![[0.0; 3]; self.geom.elems.len()];
        for f in &self.geom.faces {
            // Each face contributes len/6 to the diagonal of both its
            // endpoint nodes on both sides (the streaming matrices have zero
            // diagonal, the LLF stabilisation contributes 1/2).
            for k in 0..2 {
                edge_len[f.left as usize][f.l_nodes[k] as usize] += f.length / 6.0;
            }
            if f.right != NO_ELEM {
                for k in 0..2 {
                    edge_len[f.right as usize][f.r_nodes[k] as usize] += f.length / 6.0;
                }
            }
        }
        for (t, elem) in self.geom.elems.iter().enumerate() {
            let mat = &self.materials[t];
            for li in 0..3 {
                let node = 3 * t + li;
                let base = self.layout.offsets[node];
                for a in 0..self.block {
                    let mut d = elem.area / 6.0 * (mat.sigma_t + self.filter_diag[a]);
                    if a == 0 {
                        d -= elem.area / 6.0 * mat.sigma_s;
                    }
                    d += edge_len[t][li];
                    diag[base + a] = d;
                }
            }
        }
        diag
    }

    /// Load vector for manufactured boundary inflow given as a coefficient
    /// block per boundary point.
    pub fn inflow_rhs(&self, g: impl Fn([f64; 2]) -> Vec<f64>) -> Vec<f64> {
        let m = self.block;
        let mut out = vec![0.0; self.layout.total()];
        for f in &self.geom.faces {
            if f.right != NO_ELEM {
                continue;
            }
            let tri = &self.mesh.triangles[f.left as usize];
            let pa = self.mesh.vertices[tri.v[f.l_nodes[0] as usize] as usize];
            let pb = self.mesh.vertices[tri.v[f.l_nodes[1] as usize] as usize];
            let ga = g(pa);
            let gb = g(pb);
            assert_eq!(ga.len(), m);
            let e1 = f.length / 6.0;
            let e2 = f.length / 3.0;
            let la = 3 * f.left as usize + f.l_nodes[0] as usize;
            let lb = 3 * f.left as usize + f.l_nodes[1] as usize;
            // rhs += E (1/2)(I - Mn) g at each endpoint pairing.
            let mut ha = vec![0.0; m];
            let mut hb = vec![0.0; m];
            for k in 0..m {
                ha[k] = 0.5 * ga[k];
                hb[k] = 0.5 * gb[k];
            }
            self.mn_mul_add(f.normal, &ga, &mut ha, -0.5);
            self.mn_mul_add(f.normal, &gb, &mut hb, -0.5);
            let oa = self.layout.offsets[la];
            let ob = self.layout.offsets[lb];
            for k in 0..m {
                out[oa + k] += e2 * ha[k] + e1 * hb[k];
                out[ob + k] += e1 * ha[k] + e2 * hb[k];
            }
        }
        out
    }
}

impl TransportOp for FpnOperator<'_> {
    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn apply(&self, x: &[f64], dir: Dir, out: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.fill(0.0);
        let m = self.block;
        let mut t = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut w = vec![0.0; m];

        for (e, elem) in self.geom.elems.iter().enumerate() {
            let mat = &self.materials[e];
            let a = elem.area;
            let off = [
                self.layout.offsets[3 * e],
                self.layout.offsets[3 * e + 1],
                self.layout.offsets[3 * e + 2],
            ];
            for k in 0..m {
                t[k] = x[off[0] + k] + x[off[1] + k] + x[off[2] + k];
            }
            match dir {
                Dir::Forward => {
                    // Streaming: out_i -= (A/3) (gx_i Mx + gy_i My) t.
                    u.fill(0.0);
                    w.fill(0.0);
                    self.moments.mx.mul_add(&t, &mut u, 1.0);
                    self.moments.my.mul_add(&t, &mut w, 1.0);
                    for i in 0..3 {
                        let (gx, gy) = (elem.grad[i][0], elem.grad[i][1]);
                        let o = off[i];
                        for k in 0..m {
                            out[o + k] -= a / 3.0 * (gx * u[k] + gy * w[k]);
                        }
                    }
                }
                Dir::Adjoint => {
                    // Streaming transpose: out_i -= (A/3) (Mx sx + My sy).
                    u.fill(0.0);
                    w.fill(0.0);
                    for i in 0..3 {
                        let (gx, gy) = (elem.grad[i][0], elem.grad[i][1]);
                        let o = off[i];
                        for k in 0..m {
                            u[k] += gx * x[o + k];
                            w[k] += gy * x[o + k];
                        }
                    }
                    let mut z = vec![0.0; m];
                    self.moments.mx.mul_add(&u, &mut z, 1.0);
                    self.moments.my.mul_add(&w, &mut z, 1.0);
                    for i in 0..3 {
                        let o = off[i];
                        for k in 0..m {
                            out[o + k] -= a / 3.0 * z[k];
                        }
                    }
                }
            }
            // Removal + filter + isotropic scattering (symmetric).
            let a12 = a / 12.0;
            for i in 0..3 {
                let o = off[i];
                for k in 0..m {
                    let r = t[k] + x[o + k];
                    out[o + k] += a12 * (mat.sigma_t + self.filter_diag[k]) * r;
                }
                let r0 = t[0] + x[o];
                out[o] -= a12 * mat.sigma_s * r0;
            }
        }

        // Faces.
        let mut fa = vec![0.0; m];
        let mut fb = vec![0.0; m];
        for f in &self.geom.faces {
            let e1 = f.length / 6.0;
            let e2 = f.length / 3.0;
            let la = self.layout.offsets[3 * f.left as usize + f.l_nodes[0] as usize];
            let lb = self.layout.offsets[3 * f.left as usize + f.l_nodes[1] as usize];
            if f.right == NO_ELEM {
                // Vacuum boundary block (1/2)(Mn + I), symmetric.
                match dir {
                    Dir::Forward | Dir::Adjoint => {
                        for k in 0..m {
                            fa[k] = 0.5 * x[la + k];
                            fb[k] = 0.5 * x[lb + k];
                        }
                        self.mn_mul_add(f.normal, &x[la..la + m], &mut fa, 0.5);
                        self.mn_mul_add(f.normal, &x[lb..lb + m], &mut fb, 0.5);
                        for k in 0..m {
                            out[la + k] += e2 * fa[k] + e1 * fb[k];
                            out[lb + k] += e1 * fa[k] + e2 * fb[k];
                        }
                    }
                }
                continue;
            }
            let ra = self.layout.offsets[3 * f.right as usize + f.r_nodes[0] as usize];
            let rb = self.layout.offsets[3 * f.right as usize + f.r_nodes[1] as usize];
            match dir {
                Dir::Forward => {
                    // Lax-Friedrichs: Fhat = (1/2)[Mn (cL + cR) - (cR - cL)].
                    for k in 0..m {
                        fa[k] = 0.5 * (x[la + k] - x[ra + k]);
                        fb[k] = 0.5 * (x[lb + k] - x[rb + k]);
                    }
                    for k in 0..m {
                        t[k] = x[la + k] + x[ra + k];
                    }
                    self.mn_mul_add(f.normal, &t, &mut fa, 0.5);
                    for k in 0..m {
                        t[k] = x[lb + k] + x[rb + k];
                    }
                    self.mn_mul_add(f.normal, &t, &mut fb, 0.5);
                    for k in 0..m {
                        let qa = e2 * fa[k] + e1 * fb[k];
                        let qb = e1 * fa[k] + e2 * fb[k];
                        out[la + k] += qa;
                        out[lb + k] += qb;
                        out[ra + k] -= qa;
                        out[rb + k] -= qb;
                    }
                }
                Dir::Adjoint => {
                    // Transpose: out_L += (1/2)(Mn + I) E (cL - cR),
                    //            out_R += (1/2)(Mn - I) E (cL - cR).
                    for k in 0..m {
                        u[k] = x[la + k] - x[ra + k];
                        w[k] = x[lb + k] - x[rb + k];
                    }
                    for k in 0..m {
                        fa[k] = e2 * u[k] + e1 * w[k];
                        fb[k] = e1 * u[k] + e2 * w[k];
                    }
                    // Mn applied once per endpoint aggregate.
                    for k in 0..m {
                        t[k] = 0.5 * fa[k];
                    }
                    self.mn_mul_add(f.normal, &fa, &mut t, 0.5);
                    for k in 0..m {
                        out[la + k] += t[k];
                        out[ra + k] += t[k] - fa[k];
                    }
                    for k in 0..m {
                        t[k] = 0.5 * fb[k];
                    }
                    self.mn_mul_add(f.normal, &fb, &mut t, 0.5);
                    for k in 0..m {
                        out[lb + k] += t[k];
                        out[rb + k] += t[k] - fb[k];
                    }
                }
            }
        }
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        let m = self.block;
        let mut buf = nalgebra::DVector::zeros(m);
        for n in 0..self.layout.node_count() {
            let off = self.layout.offsets[n];
            buf.as_mut_slice().copy_from_slice(&r[off..off + m]);
            let ok = self.block_lu[self.node_block[n] as usize].solve_mut(&mut buf);
            debug_assert!(ok);
            out[off..off + m].copy_from_slice(buf.as_slice());
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn scalar_flux(&self, x: &[f64]) -> Vec<f64> {
        let s = FOUR_PI.sqrt();
        (0..self.layout.node_count()).map(|n| s * x[self.layout.offsets[n]]).collect()
    }

    fn source_rhs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.total()];
        let s = FOUR_PI.sqrt();
        for (t, elem) in self.geom.elems.iter().enumerate() {
            let q = self.materials[t].source;
            if q == 0.0 {
                continue;
            }
            for li in 0..3 {
                out[self.layout.offsets[3 * t + li]] = q * elem.area / 3.0 * s;
            }
        }
        out
    }

    fn adjoint_rhs(&self, goal_region: u32) -> Result<Vec<f64>, TransportError> {
        if !self.mesh.regions.contains_key(&goal_region) {
            return Err(TransportError::UnknownRegion(goal_region));
        }
        let vol = self.mesh.region_area(goal_region);
        let mut out = vec![0.0; self.layout.total()];
        let s = FOUR_PI.sqrt();
        for (t, elem) in self.geom.elems.iter().enumerate() {
            if elem.region != goal_region {
                continue;
            }
            for li in 0..3 {
                out[self.layout.offsets[3 * t + li]] = elem.area / 3.0 * s / vol;
            }
        }
        Ok(out)
    }
}
