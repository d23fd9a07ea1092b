//! Non-standard Haar wavelets on the hierarchical sphere partition.
//!
//! An [`AngleMap`] is a per-octant quadtree of subdivided patches plus one
//! coefficient per active function: a constant scaling function on each base
//! octant and, for every subdivided patch, three detail wavelets with +/-1
//! sign patterns over its four children (a phi-detail, a mu-detail and a
//! diagonal detail). Undivided patches are the "effective leaves"; on them
//! the expansion is piecewise constant, so the map is equivalent to a P0
//! discretisation of the sphere at its finest active level.
//!
//! The Mallat passes walk the active tree once, so all four transforms are
//! linear in the number of active functions:
//!
//! * [`AngleMap::mallat_inverse`] - coefficients to leaf values,
//! * [`AngleMap::mallat_forward`] - leaf values to coefficients,
//! * [`AngleMap::mallat_inverse_t`] / [`AngleMap::mallat_forward_t`] -
//!   the transposes, which the matrix-free transport operator and its
//!   preconditioner need.
//!
//! Coefficient layout (used by every flat vector tied to a map): octants in
//! order 0..8, within an octant the scaling coefficient first, then three
//! wavelet coefficients per subdivided patch in depth-first preorder with
//! child order `(phi-lo,mu-lo), (phi-hi,mu-lo), (phi-lo,mu-hi), (phi-hi,mu-hi)`.
//! Leaf values use the same depth-first order. Leaf count always equals
//! function count.

use crate::sphere::{base_octants, PatchId, SpherePatch};
use thiserror::Error;

const LEAF: u32 = u32::MAX;

/// Sign patterns of the three wavelets over the four children.
const SIGN_PHI: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
const SIGN_MU: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];
const SIGN_DIAG: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HaarError {
    #[error("leaf value count {got} does not match map leaf count {expected}")]
    LeafCountMismatch { expected: usize, got: usize },
    #[error("coefficient count {got} does not match map function count {expected}")]
    CoeffCountMismatch { expected: usize, got: usize },
    #[error("patch {0:?} does not exist in this map")]
    NoSuchPatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletKind {
    Phi,
    Mu,
    Diag,
}

/// Identity of one active coefficient, mostly for tests and diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoeffId {
    Scaling(u8),
    Wavelet(PatchId, WaveletKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Node {
    /// Index of the first of four contiguous children, or `LEAF`.
    children: u32,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn single() -> Self {
        Tree { nodes: vec![Node { children: LEAF }] }
    }

    pub(crate) fn is_leaf(&self, idx: u32) -> bool {
        self.nodes[idx as usize].children == LEAF
    }

    pub(crate) fn children_of(&self, idx: u32) -> u32 {
        self.nodes[idx as usize].children
    }

    /// Canonical leaf index (within this octant) of every node's first leaf.
    pub(crate) fn leaf_starts(&self) -> Vec<u32> {
        let mut tab = vec![0u32; self.nodes.len()];
        let mut counter = 0u32;
        fn walk(t: &Tree, idx: u32, counter: &mut u32, tab: &mut [u32]) {
            tab[idx as usize] = *counter;
            if t.is_leaf(idx) {
                *counter += 1;
                return;
            }
            let c = t.nodes[idx as usize].children;
            for k in 0..4 {
                walk(t, c + k, counter, tab);
            }
        }
        walk(self, 0, &mut counter, &mut tab);
        tab
    }

    fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children == LEAF).count()
    }
}

/// Outcome of a refine call; targets already at the level cap are reported,
/// not fatal.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct RefineOutcome {
    pub refined: usize,
    pub at_level_cap: Vec<PatchId>,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct CoarsenOutcome {
    pub coarsened: usize,
    /// Targets rejected because some child is itself subdivided.
    pub rejected: Vec<PatchId>,
}

/// Adaptive Haar expansion on the sphere: tree structure plus coefficients.
#[derive(Debug, Clone)]
pub struct AngleMap {
    trees: [Tree; 8],
    /// Canonical flat coefficient vector (see module docs for the layout).
    coeffs: Vec<f64>,
    max_level: u8,
}

impl PartialEq for AngleMap {
    fn eq(&self, other: &Self) -> bool {
        if self.max_level != other.max_level || self.coeffs != other.coeffs {
            return false;
        }
        // Structural comparison independent of arena layout.
        fn walk(a: &Tree, ai: u32, b: &Tree, bi: u32) -> bool {
            match (a.is_leaf(ai), b.is_leaf(bi)) {
                (true, true) => true,
                (false, false) => {
                    let ac = a.nodes[ai as usize].children;
                    let bc = b.nodes[bi as usize].children;
                    (0..4).all(|k| walk(a, ac + k, b, bc + k))
                }
                _ => false,
            }
        }
        self.trees.iter().zip(&other.trees).all(|(a, b)| walk(a, 0, b, 0))
    }
}

impl AngleMap {
    /// The coarsest map: one scaling function per octant, all coefficients 0.
    pub fn h1(max_level: u8) -> Self {
        AngleMap {
            trees: std::array::from_fn(|_| Tree::single()),
            coeffs: vec![0.0; 8],
            max_level,
        }
    }

    /// Uniformly subdivided map of the given depth.
    pub fn uniform(level: u8, max_level: u8) -> Self {
        fn build(nodes: &mut Vec<Node>, depth: u8) -> u32 {
            let idx = nodes.len() as u32;
            nodes.push(Node { children: LEAF });
            if depth > 0 {
                // Children must be contiguous; reserve, then fill.
                let first = nodes.len() as u32;
                nodes[idx as usize].children = first;
                for _ in 0..4 {
                    nodes.push(Node { children: LEAF });
                }
                for k in 0..4 {
                    let sub = first + k;
                    if depth > 1 {
                        let grand = build_children(nodes, depth - 1);
                        nodes[sub as usize].children = grand;
                    }
                }
            }
            idx
        }
        fn build_children(nodes: &mut Vec<Node>, depth: u8) -> u32 {
            let first = nodes.len() as u32;
            for _ in 0..4 {
                nodes.push(Node { children: LEAF });
            }
            for k in 0..4 {
                if depth > 1 {
                    let grand = build_children(nodes, depth - 1);
                    nodes[(first + k) as usize].children = grand;
                }
            }
            first
        }
        let mut trees: [Tree; 8] = std::array::from_fn(|_| Tree::default());
        for t in trees.iter_mut() {
            build(&mut t.nodes, level);
        }
        let mut map = AngleMap { trees, coeffs: Vec::new(), max_level };
        map.coeffs = vec![0.0; map.function_count()];
        map
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn subdivided_count(&self) -> usize {
        self.trees
            .iter()
            .map(|t| t.nodes.iter().filter(|n| n.children != LEAF).count())
            .sum()
    }

    /// Active functions: 8 scaling + 3 per subdivided patch. Always equals
    /// the number of effective leaves.
    pub fn function_count(&self) -> usize {
        8 + 3 * self.subdivided_count()
    }

    pub fn leaf_count(&self) -> usize {
        self.function_count()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn set_coefficients(&mut self, coeffs: &[f64]) -> Result<(), HaarError> {
        if coeffs.len() != self.coeffs.len() {
            return Err(HaarError::CoeffCountMismatch {
                expected: self.coeffs.len(),
                got: coeffs.len(),
            });
        }
        self.coeffs.copy_from_slice(coeffs);
        Ok(())
    }

    /// Same tree, different coefficient values.
    pub fn with_coefficients(&self, coeffs: &[f64]) -> Result<AngleMap, HaarError> {
        let mut m = self.clone();
        m.set_coefficients(coeffs)?;
        Ok(m)
    }

    /// Zeroth angular moment `int psi dOmega`; wavelets integrate to zero, so
    /// only the scaling coefficients contribute.
    pub fn scalar_flux(&self) -> f64 {
        let octant_area = std::f64::consts::PI / 2.0;
        let mut cursor = 0usize;
        let mut total = 0.0;
        for t in &self.trees {
            total += self.coeffs[cursor] * octant_area;
            cursor += 1 + 3 * t.nodes.iter().filter(|n| n.children != LEAF).count();
        }
        total
    }

    pub(crate) fn tree(&self, octant: usize) -> &Tree {
        &self.trees[octant]
    }

    /// Per octant: leaf offset of that octant's block in the canonical leaf
    /// ordering.
    pub(crate) fn octant_leaf_offsets(&self) -> [u32; 9] {
        let mut out = [0u32; 9];
        let mut acc = 0u32;
        for o in 0..8 {
            out[o] = acc;
            acc += self.trees[o].leaf_count() as u32;
        }
        out[8] = acc;
        out
    }

    /// Zeroth angular moment of an external coefficient slice laid out for
    /// this map's structure.
    pub fn scalar_flux_of(&self, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.function_count());
        let octant_area = std::f64::consts::PI / 2.0;
        let mut cursor = 0usize;
        let mut total = 0.0;
        for t in &self.trees {
            total += coeffs[cursor] * octant_area;
            cursor += 1 + 3 * t.nodes.iter().filter(|n| n.children != LEAF).count();
        }
        total
    }

    /// Support patch of every active coefficient in canonical order: the
    /// octant for a scaling function, the subdivided patch for each wavelet
    /// triple (repeated three times).
    pub fn coeff_supports(&self) -> Vec<SpherePatch> {
        let mut out = Vec::with_capacity(self.function_count());
        let octs = base_octants();
        for (o, t) in self.trees.iter().enumerate() {
            out.push(octs[o]);
            fn walk(t: &Tree, idx: u32, p: SpherePatch, out: &mut Vec<SpherePatch>) {
                if t.is_leaf(idx) {
                    return;
                }
                out.push(p);
                out.push(p);
                out.push(p);
                let c = t.nodes[idx as usize].children;
                let kids = p.children();
                for k in 0..4 {
                    walk(t, c + k as u32, kids[k], out);
                }
            }
            walk(t, 0, octs[o], &mut out);
        }
        out
    }

    /// Whether the coefficient at the given canonical position is a scaling
    /// coefficient (used where wavelet and scaling entries behave
    /// differently, e.g. operator diagonals).
    pub fn scaling_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(8);
        let mut cursor = 0usize;
        for t in &self.trees {
            out.push(cursor);
            cursor += 1 + 3 * t.nodes.iter().filter(|n| n.children != LEAF).count();
        }
        out
    }

    /// Whether the tree structures agree, ignoring coefficient values.
    pub fn same_structure(&self, other: &AngleMap) -> bool {
        fn walk(a: &Tree, ai: u32, b: &Tree, bi: u32) -> bool {
            match (a.is_leaf(ai), b.is_leaf(bi)) {
                (true, true) => true,
                (false, false) => {
                    let ac = a.nodes[ai as usize].children;
                    let bc = b.nodes[bi as usize].children;
                    (0..4).all(|k| walk(a, ac + k, b, bc + k))
                }
                _ => false,
            }
        }
        self.trees.iter().zip(&other.trees).all(|(a, b)| walk(a, 0, b, 0))
    }

    // ----- enumeration ---------------------------------------------------

    /// Geometry of every effective leaf, in canonical leaf order.
    pub fn leaf_patches(&self) -> Vec<SpherePatch> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let octs = base_octants();
        for (o, t) in self.trees.iter().enumerate() {
            fn walk(t: &Tree, idx: u32, p: SpherePatch, out: &mut Vec<SpherePatch>) {
                if t.is_leaf(idx) {
                    out.push(p);
                } else {
                    let c = t.nodes[idx as usize].children;
                    let kids = p.children();
                    for k in 0..4 {
                        walk(t, c + k as u32, kids[k], out);
                    }
                }
            }
            walk(t, 0, octs[o], &mut out);
        }
        out
    }

    /// Identities of every active coefficient, in canonical coefficient order.
    pub fn coeff_ids(&self) -> Vec<CoeffId> {
        let mut out = Vec::with_capacity(self.function_count());
        for (o, t) in self.trees.iter().enumerate() {
            out.push(CoeffId::Scaling(o as u8));
            fn walk(t: &Tree, idx: u32, id: &PatchId, out: &mut Vec<CoeffId>) {
                if t.is_leaf(idx) {
                    return;
                }
                out.push(CoeffId::Wavelet(id.clone(), WaveletKind::Phi));
                out.push(CoeffId::Wavelet(id.clone(), WaveletKind::Mu));
                out.push(CoeffId::Wavelet(id.clone(), WaveletKind::Diag));
                let c = t.nodes[idx as usize].children;
                for k in 0..4u8 {
                    walk(t, c + k as u32, &id.child(k), out);
                }
            }
            walk(t, 0, &PatchId::octant(o as u8), &mut out);
        }
        out
    }

    /// Effective leaves as patch ids, canonical order.
    pub fn leaf_ids(&self) -> Vec<PatchId> {
        let mut out = Vec::with_capacity(self.leaf_count());
        for (o, t) in self.trees.iter().enumerate() {
            fn walk(t: &Tree, idx: u32, id: &PatchId, out: &mut Vec<PatchId>) {
                if t.is_leaf(idx) {
                    out.push(id.clone());
                } else {
                    let c = t.nodes[idx as usize].children;
                    for k in 0..4u8 {
                        walk(t, c + k as u32, &id.child(k), out);
                    }
                }
            }
            walk(t, 0, &PatchId::octant(o as u8), &mut out);
        }
        out
    }

    // ----- Mallat transforms ---------------------------------------------

    /// Coefficients (embedded) to leaf values.
    pub fn mallat_inverse(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.leaf_count()];
        self.reconstruct_into(&self.coeffs, &mut out);
        out
    }

    /// Coefficients -> leaf values using an external coefficient slice with
    /// this map's structure. `out` must have `leaf_count()` entries.
    pub fn reconstruct_into(&self, coeffs: &[f64], out: &mut [f64]) {
        assert_eq!(coeffs.len(), self.function_count());
        assert_eq!(out.len(), self.leaf_count());
        let mut ci = 0usize;
        let mut li = 0usize;
        for t in &self.trees {
            let alpha = coeffs[ci];
            ci += 1;
            Self::recon_walk(t, 0, alpha, coeffs, &mut ci, out, &mut li);
        }
    }

    fn recon_walk(
        t: &Tree,
        idx: u32,
        val: f64,
        coeffs: &[f64],
        ci: &mut usize,
        out: &mut [f64],
        li: &mut usize,
    ) {
        if t.is_leaf(idx) {
            out[*li] = val;
            *li += 1;
            return;
        }
        let (wp, wm, wd) = (coeffs[*ci], coeffs[*ci + 1], coeffs[*ci + 2]);
        *ci += 3;
        let c = t.nodes[idx as usize].children;
        for k in 0..4 {
            let v = val + SIGN_PHI[k] * wp + SIGN_MU[k] * wm + SIGN_DIAG[k] * wd;
            Self::recon_walk(t, c + k as u32, v, coeffs, ci, out, li);
        }
    }

    /// Leaf values -> coefficients on the tree of `structure`.
    pub fn mallat_forward(structure: &AngleMap, leaves: &[f64]) -> Result<AngleMap, HaarError> {
        if leaves.len() != structure.leaf_count() {
            return Err(HaarError::LeafCountMismatch {
                expected: structure.leaf_count(),
                got: leaves.len(),
            });
        }
        let mut m = structure.clone();
        let mut coeffs = vec![0.0; structure.function_count()];
        structure.decompose_into(leaves, &mut coeffs);
        m.coeffs = coeffs;
        Ok(m)
    }

    /// Leaf values -> coefficients (external buffers).
    pub fn decompose_into(&self, leaves: &[f64], coeffs: &mut [f64]) {
        assert_eq!(leaves.len(), self.leaf_count());
        assert_eq!(coeffs.len(), self.function_count());
        let mut ci = 0usize;
        let mut li = 0usize;
        for t in &self.trees {
            let alpha_slot = ci;
            ci += 1;
            let avg = Self::fwd_walk(t, 0, leaves, &mut li, coeffs, &mut ci);
            coeffs[alpha_slot] = avg;
        }
    }

    fn fwd_walk(
        t: &Tree,
        idx: u32,
        leaves: &[f64],
        li: &mut usize,
        coeffs: &mut [f64],
        ci: &mut usize,
    ) -> f64 {
        if t.is_leaf(idx) {
            let v = leaves[*li];
            *li += 1;
            return v;
        }
        let slot = *ci;
        *ci += 3;
        let c = t.nodes[idx as usize].children;
        let mut v = [0.0; 4];
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = Self::fwd_walk(t, c + k as u32, leaves, li, coeffs, ci);
        }
        coeffs[slot] = 0.25 * (-v[0] + v[1] - v[2] + v[3]);
        coeffs[slot + 1] = 0.25 * (-v[0] - v[1] + v[2] + v[3]);
        coeffs[slot + 2] = 0.25 * (v[0] - v[1] - v[2] + v[3]);
        0.25 * (v[0] + v[1] + v[2] + v[3])
    }

    /// Transpose of [`reconstruct_into`][Self::reconstruct_into]: maps a
    /// covector on leaves to a covector on coefficients (signed sums up the
    /// tree). This is the restriction the Galerkin operator needs.
    pub fn mallat_inverse_t(&self, leaf_cov: &[f64], coeff_cov: &mut [f64]) {
        assert_eq!(leaf_cov.len(), self.leaf_count());
        assert_eq!(coeff_cov.len(), self.function_count());
        let mut ci = 0usize;
        let mut li = 0usize;
        for t in &self.trees {
            let alpha_slot = ci;
            ci += 1;
            let sum = Self::ivt_walk(t, 0, leaf_cov, &mut li, coeff_cov, &mut ci);
            coeff_cov[alpha_slot] = sum;
        }
    }

    fn ivt_walk(
        t: &Tree,
        idx: u32,
        leaf_cov: &[f64],
        li: &mut usize,
        out: &mut [f64],
        ci: &mut usize,
    ) -> f64 {
        if t.is_leaf(idx) {
            let v = leaf_cov[*li];
            *li += 1;
            return v;
        }
        let slot = *ci;
        *ci += 3;
        let c = t.nodes[idx as usize].children;
        let mut y = [0.0; 4];
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = Self::ivt_walk(t, c + k as u32, leaf_cov, li, out, ci);
        }
        out[slot] = -y[0] + y[1] - y[2] + y[3];
        out[slot + 1] = -y[0] - y[1] + y[2] + y[3];
        out[slot + 2] = y[0] - y[1] - y[2] + y[3];
        y[0] + y[1] + y[2] + y[3]
    }

    /// Transpose of [`decompose_into`][Self::decompose_into]: coefficient
    /// covector to leaf covector (averaging pushed down the tree).
    pub fn mallat_forward_t(&self, coeff_cov: &[f64], leaf_cov: &mut [f64]) {
        assert_eq!(coeff_cov.len(), self.function_count());
        assert_eq!(leaf_cov.len(), self.leaf_count());
        let mut ci = 0usize;
        let mut li = 0usize;
        for t in &self.trees {
            let acc = coeff_cov[ci];
            ci += 1;
            Self::fwt_walk(t, 0, acc, coeff_cov, &mut ci, leaf_cov, &mut li);
        }
    }

    fn fwt_walk(
        t: &Tree,
        idx: u32,
        acc: f64,
        coeff_cov: &[f64],
        ci: &mut usize,
        out: &mut [f64],
        li: &mut usize,
    ) {
        if t.is_leaf(idx) {
            out[*li] = acc;
            *li += 1;
            return;
        }
        let (yp, ym, yd) = (coeff_cov[*ci], coeff_cov[*ci + 1], coeff_cov[*ci + 2]);
        *ci += 3;
        let c = t.nodes[idx as usize].children;
        for k in 0..4 {
            let a = 0.25 * (acc + SIGN_PHI[k] * yp + SIGN_MU[k] * ym + SIGN_DIAG[k] * yd);
            Self::fwt_walk(t, c + k as u32, a, coeff_cov, ci, out, li);
        }
    }

    // ----- adaptivity ----------------------------------------------------

    fn find_node(&self, id: &PatchId) -> Option<u32> {
        let t = &self.trees[id.octant as usize];
        let mut idx = 0u32;
        for &c in &id.path {
            if t.is_leaf(idx) {
                return None;
            }
            idx = t.nodes[idx as usize].children + c as u32;
        }
        Some(idx)
    }

    /// Subdivide the target leaves. New wavelet coefficients start at zero, so
    /// the represented function is unchanged. Targets at the level cap are
    /// reported in the outcome; targets that are already subdivided are
    /// ignored.
    pub fn refine(&mut self, targets: &[PatchId]) -> RefineOutcome {
        let mut outcome = RefineOutcome::default();
        let mut split: Vec<Vec<u32>> = vec![Vec::new(); 8];
        for id in targets {
            if id.level() >= self.max_level as usize {
                outcome.at_level_cap.push(id.clone());
                continue;
            }
            if let Some(idx) = self.find_node(id) {
                if self.trees[id.octant as usize].is_leaf(idx) {
                    split[id.octant as usize].push(idx);
                    outcome.refined += 1;
                }
            }
        }
        if outcome.refined > 0 {
            self.rebuild(&split, &[]);
        }
        outcome
    }

    /// Remove the three wavelets of each target, whose children must all be
    /// leaves; offending targets are reported, not fatal.
    pub fn coarsen(&mut self, targets: &[PatchId]) -> CoarsenOutcome {
        let mut outcome = CoarsenOutcome::default();
        let mut merge: Vec<Vec<u32>> = vec![Vec::new(); 8];
        for id in targets {
            match self.find_node(id) {
                Some(idx) => {
                    let t = &self.trees[id.octant as usize];
                    if t.is_leaf(idx) {
                        outcome.rejected.push(id.clone());
                        continue;
                    }
                    let c = t.nodes[idx as usize].children;
                    if (0..4).all(|k| t.is_leaf(c + k)) {
                        merge[id.octant as usize].push(idx);
                        outcome.coarsened += 1;
                    } else {
                        outcome.rejected.push(id.clone());
                    }
                }
                None => outcome.rejected.push(id.clone()),
            }
        }
        if outcome.coarsened > 0 {
            self.rebuild(&[], &merge);
        }
        outcome
    }

    /// Rebuild trees and the coefficient vector applying the given per-octant
    /// splits (leaf node indices) and merges (subdivided node indices).
    /// Single pass, which also compacts the arenas.
    fn rebuild(&mut self, split: &[Vec<u32>], merge: &[Vec<u32>]) {
        let empty: Vec<u32> = Vec::new();
        let mut new_trees: [Tree; 8] = std::array::from_fn(|_| Tree::default());
        let mut new_coeffs: Vec<f64> = Vec::with_capacity(self.coeffs.len());
        let mut ci = 0usize;
        for o in 0..8 {
            let old = &self.trees[o];
            let split_set = split.get(o).unwrap_or(&empty);
            let merge_set = merge.get(o).unwrap_or(&empty);
            let t = &mut new_trees[o];
            t.nodes.push(Node { children: LEAF });
            // Octant scaling coefficient.
            new_coeffs.push(self.coeffs[ci]);
            ci += 1;
            Self::rebuild_walk(old, 0, split_set, merge_set, t, 0, &self.coeffs, &mut ci, &mut new_coeffs);
        }
        self.trees = new_trees;
        self.coeffs = new_coeffs;
    }

    #[allow(clippy::too_many_arguments)]
    fn rebuild_walk(
        old: &Tree,
        oi: u32,
        split: &[u32],
        merge: &[u32],
        new: &mut Tree,
        ni: u32,
        old_coeffs: &[f64],
        ci: &mut usize,
        new_coeffs: &mut Vec<f64>,
    ) {
        if old.is_leaf(oi) {
            if split.contains(&oi) {
                // Fresh subdivision with zero wavelets.
                let first = new.nodes.len() as u32;
                new.nodes[ni as usize].children = first;
                for _ in 0..4 {
                    new.nodes.push(Node { children: LEAF });
                }
                new_coeffs.extend_from_slice(&[0.0, 0.0, 0.0]);
            }
            return;
        }
        // Subdivided in the old tree: consume its three wavelets.
        let w = [old_coeffs[*ci], old_coeffs[*ci + 1], old_coeffs[*ci + 2]];
        *ci += 3;
        if merge.contains(&oi) {
            // Children are all leaves; drop the wavelets, node becomes a leaf.
            return;
        }
        new_coeffs.extend_from_slice(&w);
        let first = new.nodes.len() as u32;
        new.nodes[ni as usize].children = first;
        for _ in 0..4 {
            new.nodes.push(Node { children: LEAF });
        }
        let oc = old.nodes[oi as usize].children;
        for k in 0..4 {
            Self::rebuild_walk(old, oc + k, split, merge, new, first + k, old_coeffs, ci, new_coeffs);
        }
    }

    /// All effective leaves intersecting the phi x mu window (plus, when
    /// `mirror` is set, its reflection across mu = 0) refined down to `level`.
    pub fn fixed_window(
        phi_lo: f64,
        phi_hi: f64,
        mu_lo: f64,
        mu_hi: f64,
        level: u8,
        max_level: u8,
        mirror: bool,
    ) -> AngleMap {
        let mut map = AngleMap::h1(max_level.max(level));
        let intersects = |p: &SpherePatch| -> bool {
            let phi_ok = p.phi_lo < phi_hi && p.phi_hi > phi_lo;
            let mu_ok = p.mu_lo < mu_hi && p.mu_hi > mu_lo;
            let direct = phi_ok && mu_ok;
            if mirror {
                let m_ok = p.mu_lo < -mu_lo && p.mu_hi > -mu_hi;
                direct || (phi_ok && m_ok)
            } else {
                direct
            }
        };
        loop {
            let targets: Vec<PatchId> = map
                .leaf_ids()
                .into_iter()
                .filter(|id| id.level() < level as usize && intersects(&id.geometry()))
                .collect();
            if targets.is_empty() {
                break;
            }
            map.refine(&targets);
        }
        map
    }

    /// Mirror image across mu = 0: octants swap hemispheres and the mu-ordered
    /// children swap within each subdivision. Wavelet mu and diagonal details
    /// flip sign.
    pub fn mirrored(&self) -> AngleMap {
        // Trees swap hemispheres; within each subdivision the child order
        // swaps (0<->2, 1<->3) and the coefficients are remapped accordingly.
        // Because the new tree is visited in swapped order, each source node's
        // wavelet offset must be known up front.
        let mut alpha_off = [0usize; 8];
        let mut wav_off: Vec<Vec<usize>> = Vec::with_capacity(8);
        {
            fn scan(t: &Tree, idx: u32, ci: &mut usize, offs: &mut [usize]) {
                if t.is_leaf(idx) {
                    return;
                }
                offs[idx as usize] = *ci;
                *ci += 3;
                let c = t.nodes[idx as usize].children;
                for k in 0..4 {
                    scan(t, c + k, ci, offs);
                }
            }
            let mut ci = 0usize;
            for (o, t) in self.trees.iter().enumerate() {
                alpha_off[o] = ci;
                ci += 1;
                let mut offs = vec![usize::MAX; t.nodes.len()];
                scan(t, 0, &mut ci, &mut offs);
                wav_off.push(offs);
            }
        }

        fn walk(
            old: &Tree,
            oi: u32,
            offs: &[usize],
            src_coeffs: &[f64],
            new: &mut Tree,
            ni: u32,
            out: &mut Vec<f64>,
        ) {
            if old.is_leaf(oi) {
                return;
            }
            let at = offs[oi as usize];
            // phi-detail keeps sign, mu- and diag-details flip.
            out.extend_from_slice(&[src_coeffs[at], -src_coeffs[at + 1], -src_coeffs[at + 2]]);
            let first = new.nodes.len() as u32;
            new.nodes[ni as usize].children = first;
            for _ in 0..4 {
                new.nodes.push(Node { children: LEAF });
            }
            let old_children = old.nodes[oi as usize].children;
            const SWAP: [u32; 4] = [2, 3, 0, 1];
            for k in 0..4u32 {
                walk(old, old_children + SWAP[k as usize], offs, src_coeffs, new, first + k, out);
            }
        }
        let mut trees: [Tree; 8] = std::array::from_fn(|_| Tree::default());
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for o in 0..8 {
            let src = if o < 4 { o + 4 } else { o - 4 };
            let t = &mut trees[o];
            t.nodes.push(Node { children: LEAF });
            coeffs.push(self.coeffs[alpha_off[src]]);
            walk(&self.trees[src], 0, &wav_off[src], &self.coeffs, t, 0, &mut coeffs);
        }
        AngleMap { trees, coeffs, max_level: self.max_level }
    }
}
