//! Goal-based angular adaptivity driver.
//!
//! The robust loop solves one coarse filtered-harmonics forward/adjoint pair
//! up front. Each adapt step then solves the Haar forward/adjoint problems on
//! the current per-node angle maps, marks spatial nodes whose Haar scalar
//! flux disagrees with the surrogate by more than the configured ratio,
//! substitutes the projected surrogate on marked nodes, and drives
//! refine/coarsen thresholding with the dual-weighted metric built from the
//! substituted fields. Once no node is marked, the metric is identical to the
//! plain (non-robust) one by construction.

use crate::goal::{effectivity_index, error_estimate, error_metric, reduced_residual, MetricField};
use crate::haar::{AngleMap, Tree};
use crate::harmonics::FpnConfig;
use crate::mesh::TriMesh;
use crate::projection::fpn_to_anglemap;
use crate::sphere::PatchId;
use crate::transport::{
    functional, solve, Dir, FpnOperator, HaarOperator, Layout, SolveError, SolveOptions,
    TransportOp,
};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    /// Surrogate-bootstrapped metric (the robust loop).
    Robust,
    /// Plain dual-weighted metric, no surrogate.
    NonRobust,
    /// A priori refinement of every patch intersecting the window (and its
    /// mirror across mu = 0), one forward solve.
    Fixed { phi_lo: f64, phi_hi: f64, mu_lo: f64, mu_hi: f64, level: u8 },
    /// Single uniform filtered-harmonics forward solve.
    FpnUniform,
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub mode: RunMode,
    /// Target error in the goal functional.
    pub tau: f64,
    /// Haar refinement depth cap.
    pub max_level: u8,
    /// Adapt steps to take.
    pub steps: usize,
    /// Underresolved threshold: a node is marked when Haar and surrogate
    /// scalar fluxes differ by more than this factor either way.
    pub ratio: f64,
    /// Wavelet groups with metric below this fraction are coarsened.
    pub coarsen_fraction: f64,
    /// Scalar-flux pairs with both magnitudes below this floor count as
    /// resolved.
    pub flux_floor: f64,
    /// Low-order filtered-harmonics surrogate (robust and fpn-uniform modes).
    pub surrogate: FpnConfig,
    pub goal_region: u32,
    pub solver: SolveOptions,
    /// Reference detector value for relative errors and effectivity.
    pub reference: Option<f64>,
    /// Repeat one extra step at the maximum refinement so the adaptivity can
    /// settle.
    pub extra_settle_step: bool,
}

impl AdaptConfig {
    pub fn new(mode: RunMode, tau: f64, goal_region: u32) -> Self {
        AdaptConfig {
            mode,
            tau,
            max_level: 8,
            steps: 8,
            ratio: 10.0,
            coarsen_fraction: 0.01,
            flux_floor: 1e-300,
            surrogate: FpnConfig::new(1, 1.0),
            goal_region,
            solver: SolveOptions::default(),
            reference: None,
            extra_settle_step: false,
        }
    }
}

/// One row of the run record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub ndof: usize,
    pub mean_angle_dofs: f64,
    pub detector: f64,
    pub rel_error: f64,
    pub effectivity: f64,
    pub underresolved_pct: f64,
    /// Cumulative wall time since the run started, surrogate solves included.
    pub wall_seconds: f64,
}

/// Everything a per-step observer may want to dump.
pub struct StepOutput<'a> {
    pub record: &'a StepRecord,
    pub mesh: &'a TriMesh,
    pub maps: &'a [AngleMap],
    pub scalar_flux: &'a [f64],
    pub functions_per_node: &'a [u32],
    pub underresolved: Option<&'a [bool]>,
    pub forward: &'a [f64],
    pub adjoint: Option<&'a [f64]>,
    pub metric: Option<&'a MetricField>,
}

pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub maps: Vec<AngleMap>,
    pub forward: Vec<f64>,
    pub adjoint: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("solve failed at step {step}: {source}")]
    Solver {
        step: usize,
        source: SolveError,
        partial: Vec<StepRecord>,
    },
    #[error(transparent)]
    Transport(#[from] crate::transport::TransportError),
    #[error(transparent)]
    Goal(#[from] crate::goal::GoalError),
}

/// Two-sided scalar-flux comparison per DG node; pairs with both magnitudes
/// below the floor count as resolved.
pub fn mark_underresolved(
    phi_haar: &[f64],
    phi_haar_adj: &[f64],
    phi_fpn: &[f64],
    phi_fpn_adj: &[f64],
    ratio: f64,
    floor: f64,
) -> Vec<bool> {
    let pair_bad = |h: f64, f: f64| -> bool {
        let (h, f) = (h.abs(), f.abs());
        if h < floor && f < floor {
            false
        } else {
            f > ratio * h || h > ratio * f
        }
    };
    phi_haar
        .iter()
        .zip(phi_haar_adj)
        .zip(phi_fpn.iter().zip(phi_fpn_adj))
        .map(|((h, ha), (f, fa))| pair_bad(*h, *f) || pair_bad(*ha, *fa))
        .collect()
}

/// Per-node substitution: marked nodes carry the projected surrogate block,
/// unmarked nodes keep the Haar field unchanged.
pub fn assemble_resolved_field(
    haar_field: &[f64],
    fpn_field: &[f64],
    fpn_order: u32,
    flags: &[bool],
    maps: &[AngleMap],
    layout: &Layout,
) -> Vec<f64> {
    let block = ((fpn_order + 1) * (fpn_order + 1)) as usize;
    let mut out = haar_field.to_vec();
    for (n, flagged) in flags.iter().enumerate() {
        if !flagged {
            continue;
        }
        let coeffs = &fpn_field[n * block..(n + 1) * block];
        let projected = fpn_to_anglemap(coeffs, fpn_order, &maps[n])
            .expect("projection onto an existing map cannot fail");
        out[layout.range(n)].copy_from_slice(projected.coefficients());
    }
    out
}

/// Threshold refine/coarsen decisions of one metric against one node's maps.
///
/// A subdivided patch refines its leaf children when the largest metric entry
/// over its three wavelets exceeds 1, and coarsens (dropping its wavelets)
/// when that maximum falls below `coarsen_fraction` with all children leaves.
/// An undivided base octant refines when its scaling entry exceeds 1 - the
/// only way refinement can start from the coarsest map, whose sole active
/// details are the scaling functions. Refinement wins over coarsening; base
/// octants are never coarsened.
pub fn threshold_adapt(
    metric: &MetricField,
    maps: &[AngleMap],
    layout: &Layout,
    max_level: u8,
    coarsen_fraction: f64,
) -> Vec<AngleMap> {
    let mut out = Vec::with_capacity(maps.len());
    for (n, map) in maps.iter().enumerate() {
        let vals = &metric.values[layout.range(n)];
        let mut refine: Vec<PatchId> = Vec::new();
        let mut coarsen: Vec<PatchId> = Vec::new();
        let mut cursor = 0usize;
        for o in 0..8u8 {
            let tree = map.tree(o as usize);
            let scaling = vals[cursor];
            cursor += 1;
            if tree.is_leaf(0) {
                if scaling > 1.0 && max_level > 0 {
                    refine.push(PatchId::octant(o));
                }
                continue;
            }
            walk_thresholds(
                tree,
                0,
                &PatchId::octant(o),
                vals,
                &mut cursor,
                max_level,
                coarsen_fraction,
                &mut refine,
                &mut coarsen,
            );
        }
        let mut new_map = map.clone();
        new_map.refine(&refine);
        // Octants stay; anything whose children got refined is rejected by
        // the precondition inside coarsen, so refinement wins.
        let coarsen: Vec<PatchId> = coarsen.into_iter().filter(|id| !id.path.is_empty()).collect();
        new_map.coarsen(&coarsen);
        out.push(new_map);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn walk_thresholds(
    tree: &Tree,
    node: u32,
    id: &PatchId,
    vals: &[f64],
    cursor: &mut usize,
    max_level: u8,
    coarsen_fraction: f64,
    refine: &mut Vec<PatchId>,
    coarsen: &mut Vec<PatchId>,
) {
    debug_assert!(!tree.is_leaf(node));
    let g = vals[*cursor].max(vals[*cursor + 1]).max(vals[*cursor + 2]);
    *cursor += 3;
    let children = tree.children_of(node);
    let mut all_leaves = true;
    for k in 0..4u8 {
        let child = children + k as u32;
        let child_id = id.child(k);
        if tree.is_leaf(child) {
            if g > 1.0 && child_id.level() < max_level as usize {
                refine.push(child_id);
            }
        } else {
            all_leaves = false;
            walk_thresholds(tree, child, &child_id, vals, cursor, max_level, coarsen_fraction, refine, coarsen);
        }
    }
    if g < coarsen_fraction && all_leaves {
        coarsen.push(id.clone());
    }
}

/// Transfer a field between angle maps: injection where the new map is finer,
/// area-weighted averaging where it is coarser.
pub fn transfer_field(
    old_maps: &[AngleMap],
    old_layout: &Layout,
    field: &[f64],
    new_maps: &[AngleMap],
    new_layout: &Layout,
) -> Vec<f64> {
    let mut out = vec![0.0; new_layout.total()];
    for n in 0..old_maps.len() {
        let old_map = &old_maps[n];
        let new_map = &new_maps[n];
        let mut old_leaves = vec![0.0; old_map.leaf_count()];
        old_map.reconstruct_into(&field[old_layout.range(n)], &mut old_leaves);
        let old_patches = old_map.leaf_patches();
        let new_patches = new_map.leaf_patches();
        // Mean of the old piecewise-constant field over each new leaf. Both
        // leaf sequences advance together in canonical order; any two patches
        // of the nested hierarchy are disjoint, equal, or one contains the
        // other, and their bounds are bit-identical midpoint arithmetic, so
        // strict comparisons are exact.
        let mut new_leaves = vec![0.0; new_patches.len()];
        let mut oi = 0usize;
        for (ni, np) in new_patches.iter().enumerate() {
            while oi < old_patches.len() && !overlaps(&old_patches[oi], np) {
                oi += 1;
            }
            debug_assert!(oi < old_patches.len());
            if old_patches[oi].area() >= np.area() {
                // Old leaf contains (or equals) the new one: inject. The
                // cursor stays, since the next new leaf may sit in the same
                // old leaf.
                new_leaves[ni] = old_leaves[oi];
            } else {
                // New leaf spans several old leaves: area-weighted mean.
                let mut acc = 0.0;
                let mut area = 0.0;
                let mut k = oi;
                while k < old_patches.len() && overlaps(&old_patches[k], np) {
                    acc += old_leaves[k] * old_patches[k].area();
                    area += old_patches[k].area();
                    k += 1;
                }
                new_leaves[ni] = acc / area;
                oi = k;
            }
        }
        let projected = AngleMap::mallat_forward(new_map, &new_leaves).expect("leaf counts match");
        out[new_layout.range(n)].copy_from_slice(projected.coefficients());
    }
    out
}

fn overlaps(a: &crate::sphere::SpherePatch, b: &crate::sphere::SpherePatch) -> bool {
    a.phi_lo < b.phi_hi && a.phi_hi > b.phi_lo && a.mu_lo < b.mu_hi && a.mu_hi > b.mu_lo
}

/// Run the configured mode, calling `observer` once per completed step.
pub fn run(
    mesh: &TriMesh,
    config: &AdaptConfig,
    mut observer: impl FnMut(&StepOutput),
) -> Result<RunOutcome, DriverError> {
    let start = Instant::now();
    let n_nodes = 3 * mesh.triangles.len();

    match &config.mode {
        RunMode::FpnUniform => {
            let op = FpnOperator::new(mesh, config.surrogate);
            let q = op.source_rhs();
            let (psi, _) = solve(&op, &q, Dir::Forward, &config.solver)
                .map_err(|source| DriverError::Solver { step: 1, source, partial: Vec::new() })?;
            let detector = functional(&op, mesh, &psi, config.goal_region)?;
            let record = StepRecord {
                step: 1,
                ndof: op.dim(),
                mean_angle_dofs: op.dim() as f64 / n_nodes as f64,
                detector,
                rel_error: rel_error(detector, config.reference),
                effectivity: f64::NAN,
                underresolved_pct: f64::NAN,
                wall_seconds: start.elapsed().as_secs_f64(),
            };
            let phi = op.scalar_flux(&psi);
            let funcs = vec![config.surrogate.function_count() as u32; n_nodes];
            // Angle maps are not meaningful here; report the coarsest.
            let maps = vec![AngleMap::h1(config.max_level); n_nodes];
            observer(&StepOutput {
                record: &record,
                mesh,
                maps: &maps,
                scalar_flux: &phi,
                functions_per_node: &funcs,
                underresolved: None,
                forward: &psi,
                adjoint: None,
                metric: None,
            });
            return Ok(RunOutcome { records: vec![record], maps, forward: psi, adjoint: None });
        }
        RunMode::Fixed { phi_lo, phi_hi, mu_lo, mu_hi, level } => {
            let map = AngleMap::fixed_window(
                *phi_lo,
                *phi_hi,
                *mu_lo,
                *mu_hi,
                *level,
                config.max_level.max(*level),
                true,
            );
            let maps = vec![map; n_nodes];
            let op = HaarOperator::new(mesh, &maps)?;
            let q = op.source_rhs();
            let (psi, _) = solve(&op, &q, Dir::Forward, &config.solver)
                .map_err(|source| DriverError::Solver { step: 1, source, partial: Vec::new() })?;
            let detector = functional(&op, mesh, &psi, config.goal_region)?;
            let record = StepRecord {
                step: 1,
                ndof: op.dim(),
                mean_angle_dofs: op.dim() as f64 / n_nodes as f64,
                detector,
                rel_error: rel_error(detector, config.reference),
                effectivity: f64::NAN,
                underresolved_pct: f64::NAN,
                wall_seconds: start.elapsed().as_secs_f64(),
            };
            let phi = op.scalar_flux(&psi);
            let funcs: Vec<u32> = maps.iter().map(|m| m.function_count() as u32).collect();
            observer(&StepOutput {
                record: &record,
                mesh,
                maps: &maps,
                scalar_flux: &phi,
                functions_per_node: &funcs,
                underresolved: None,
                forward: &psi,
                adjoint: None,
                metric: None,
            });
            return Ok(RunOutcome { records: vec![record], maps, forward: psi, adjoint: None });
        }
        RunMode::Robust | RunMode::NonRobust => {}
    }

    let robust = config.mode == RunMode::Robust;
    let mut records: Vec<StepRecord> = Vec::new();

    // Surrogate forward/adjoint, solved once and reused at every step.
    let surrogate = if robust {
        let op = FpnOperator::new(mesh, config.surrogate);
        let q = op.source_rhs();
        let qs = op.adjoint_rhs(config.goal_region)?;
        let (fwd, _) = solve(&op, &q, Dir::Forward, &config.solver)
            .map_err(|source| DriverError::Solver { step: 0, source, partial: Vec::new() })?;
        let (adj, _) = solve(&op, &qs, Dir::Adjoint, &config.solver)
            .map_err(|source| DriverError::Solver { step: 0, source, partial: Vec::new() })?;
        let phi_f = op.scalar_flux(&fwd);
        let phi_f_adj = op.scalar_flux(&adj);
        Some((fwd, adj, phi_f, phi_f_adj))
    } else {
        None
    };

    let total_steps = config.steps + usize::from(config.extra_settle_step);
    let mut maps: Vec<AngleMap> = vec![AngleMap::h1(config.max_level); n_nodes];
    let mut prev_adjoint: Option<(Vec<AngleMap>, Vec<f64>)> = None;
    let mut final_forward: Vec<f64> = Vec::new();
    let mut final_adjoint: Option<Vec<f64>> = None;

    for step in 1..=total_steps {
        let op = HaarOperator::new(mesh, &maps)?;
        let layout = op.layout().clone();
        let q = op.source_rhs();
        let psi = match solve(&op, &q, Dir::Forward, &config.solver) {
            Ok((x, _)) => x,
            Err(source) => return Err(DriverError::Solver { step, source, partial: records }),
        };
        let is_last = step == total_steps;
        // The adjoint solve is skipped on the final step; the previous
        // adjoint, transferred onto the current maps, still feeds the metric
        // and effectivity bookkeeping.
        let psi_star = if !is_last || prev_adjoint.is_none() {
            let qs = op.adjoint_rhs(config.goal_region)?;
            match solve(&op, &qs, Dir::Adjoint, &config.solver) {
                Ok((x, _)) => x,
                Err(source) => return Err(DriverError::Solver { step, source, partial: records }),
            }
        } else {
            let (old_maps, old_field) = prev_adjoint.as_ref().unwrap();
            let old_layout = Layout::from_maps(old_maps);
            transfer_field(old_maps, &old_layout, old_field, &maps, &layout)
        };

        let phi_h = op.scalar_flux(&psi);
        let phi_h_adj = op.scalar_flux(&psi_star);

        let flags = surrogate.as_ref().map(|(_, _, phi_f, phi_f_adj)| {
            mark_underresolved(&phi_h, &phi_h_adj, phi_f, phi_f_adj, config.ratio, config.flux_floor)
        });
        let underresolved_pct = flags
            .as_ref()
            .map(|f| 100.0 * f.iter().filter(|&&b| b).count() as f64 / n_nodes as f64)
            .unwrap_or(f64::NAN);

        let (psi_res, psi_star_res) = match (&surrogate, &flags) {
            (Some((fpn_fwd, fpn_adj, _, _)), Some(flags)) => (
                assemble_resolved_field(&psi, fpn_fwd, config.surrogate.order, flags, &maps, &layout),
                assemble_resolved_field(&psi_star, fpn_adj, config.surrogate.order, flags, &maps, &layout),
            ),
            _ => (psi.clone(), psi_star.clone()),
        };

        let diag = op.diagonal();
        let rhat = reduced_residual(&diag, &psi_res);
        let rhat_star = reduced_residual(&diag, &psi_star_res);
        let ndof = op.dim();
        let metric = error_metric(&psi_res, &psi_star_res, &rhat, &rhat_star, ndof, config.tau)?;
        let estimate = error_estimate(&psi_res, &rhat_star);

        let detector = functional(&op, mesh, &psi, config.goal_region)?;
        let effectivity = config
            .reference
            .and_then(|r| effectivity_index(estimate, detector - r))
            .unwrap_or(f64::NAN);

        let record = StepRecord {
            step,
            ndof,
            mean_angle_dofs: ndof as f64 / n_nodes as f64,
            detector,
            rel_error: rel_error(detector, config.reference),
            effectivity,
            underresolved_pct,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        let funcs: Vec<u32> = maps.iter().map(|m| m.function_count() as u32).collect();
        observer(&StepOutput {
            record: &record,
            mesh,
            maps: &maps,
            scalar_flux: &phi_h,
            functions_per_node: &funcs,
            underresolved: flags.as_deref(),
            forward: &psi,
            adjoint: Some(&psi_star),
            metric: Some(&metric),
        });
        records.push(record);

        if is_last {
            final_forward = psi;
            final_adjoint = Some(psi_star);
        } else {
            prev_adjoint = Some((maps.clone(), psi_star));
            maps = threshold_adapt(&metric, &maps, &layout, config.max_level, config.coarsen_fraction);
        }
    }

    Ok(RunOutcome { records, maps, forward: final_forward, adjoint: final_adjoint })
}

fn rel_error(detector: f64, reference: Option<f64>) -> f64 {
    match reference {
        Some(r) if r.abs() > 0.0 => (detector - r).abs() / r.abs(),
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_duct;

    #[test]
    fn marking_rules() {
        // Both pairs agree -> resolved.
        let flags = mark_underresolved(&[1.0], &[1.0], &[1.0], &[1.0], 10.0, 1e-300);
        assert_eq!(flags, vec![false]);
        // Haar dead, surrogate alive -> underresolved.
        let flags = mark_underresolved(&[0.0], &[1.0], &[1e-3], &[1.0], 10.0, 1e-300);
        assert_eq!(flags, vec![true]);
        // Boundary case just past the ratio.
        let flags = mark_underresolved(&[1.0], &[1.0], &[10.5], &[1.0], 10.0, 1e-300);
        assert_eq!(flags, vec![true]);
        // Exactly at the ratio is still resolved (strict inequality).
        let flags = mark_underresolved(&[1.0], &[1.0], &[10.0], &[1.0], 10.0, 1e-300);
        assert_eq!(flags, vec![false]);
        // Both below the floor -> resolved even at wild ratios.
        let flags = mark_underresolved(&[1e-320], &[1.0], &[0.0], &[1.0], 10.0, 1e-300);
        assert_eq!(flags, vec![false]);
        // Adjoint pair alone can trigger.
        let flags = mark_underresolved(&[1.0], &[0.0], &[1.0], &[1e-5], 10.0, 1e-300);
        assert_eq!(flags, vec![true]);
    }

    #[test]
    fn resolved_assembly_substitutes_per_node() {
        let maps = vec![AngleMap::h1(3), AngleMap::h1(3)];
        let layout = Layout::from_maps(&maps);
        let haar: Vec<f64> = (0..16).map(|i| i as f64).collect();
        // Constant surrogate: f00 only.
        let order = 1u32;
        let block = 4;
        let mut fpn = vec![0.0; 2 * block];
        fpn[0] = 1.0;
        fpn[block] = 2.0;

        // No flags: bit-for-bit the Haar field.
        let out = assemble_resolved_field(&haar, &fpn, order, &[false, false], &maps, &layout);
        assert_eq!(out, haar);

        // All flagged: projected surrogate everywhere.
        let out = assemble_resolved_field(&haar, &fpn, order, &[true, true], &maps, &layout);
        let expected0 = crate::projection::fpn_to_anglemap(&fpn[0..block], order, &maps[0]).unwrap();
        assert_eq!(&out[0..8], expected0.coefficients());

        // Mixed: per-node equality with the respective source.
        let out = assemble_resolved_field(&haar, &fpn, order, &[false, true], &maps, &layout);
        assert_eq!(&out[0..8], &haar[0..8]);
        let expected1 = crate::projection::fpn_to_anglemap(&fpn[block..], order, &maps[1]).unwrap();
        assert_eq!(&out[8..16], expected1.coefficients());
    }

    #[test]
    fn threshold_rules() {
        // All-zero metric leaves a fresh coarsest map unchanged.
        let maps = vec![AngleMap::h1(4)];
        let layout = Layout::from_maps(&maps);
        let metric = MetricField { values: vec![0.0; 8], ndof: 8, tau: 1.0 };
        let out = threshold_adapt(&metric, &maps, &layout, 4, 0.01);
        assert!(out[0] == maps[0]);

        // A scaling entry above 1 subdivides its octant.
        let mut vals = vec![0.0; 8];
        vals[3] = 2.0;
        let metric = MetricField { values: vals, ndof: 8, tau: 1.0 };
        let out = threshold_adapt(&metric, &maps, &layout, 4, 0.01);
        assert_eq!(out[0].function_count(), 11);

        // A hot wavelet triple subdivides exactly its patch's leaf children.
        let mut map = AngleMap::h1(4);
        map.refine(&[PatchId::octant(0)]);
        let maps = vec![map];
        let layout = Layout::from_maps(&maps);
        let mut vals = vec![0.0; 11];
        vals[2] = 2.0; // one of octant 0's wavelets
        let metric = MetricField { values: vals, ndof: 11, tau: 1.0 };
        let out = threshold_adapt(&metric, &maps, &layout, 4, 0.01);
        // All four children refined: 11 + 4 * 3 = 23.
        assert_eq!(out[0].function_count(), 23);

        // At the level cap nothing happens.
        let out = threshold_adapt(&metric, &maps, &layout, 1, 0.01);
        assert_eq!(out[0].function_count(), 11);

        // Cold wavelets below the coarsen fraction drop, but base octants
        // never coarsen: with every entry cold, only the depth-1 patch goes.
        let mut deep = AngleMap::h1(4);
        deep.refine(&[PatchId::octant(0)]);
        deep.refine(&[PatchId { octant: 0, path: vec![1] }]);
        assert_eq!(deep.function_count(), 14);
        let maps = vec![deep];
        let layout = Layout::from_maps(&maps);
        let metric = MetricField { values: vec![0.001; 14], ndof: 14, tau: 1.0 };
        let out = threshold_adapt(&metric, &maps, &layout, 4, 0.01);
        assert_eq!(out[0].function_count(), 11);
        // A second pass cannot remove the octant's own wavelets.
        let layout2 = Layout::from_maps(&out);
        let metric2 = MetricField { values: vec![0.001; 11], ndof: 11, tau: 1.0 };
        let out2 = threshold_adapt(&metric2, &out, &layout2, 4, 0.01);
        assert_eq!(out2[0].function_count(), 11);
    }

    #[test]
    fn transfer_roundtrip_and_restriction() {
        let coarse = AngleMap::h1(4);
        let mut fine = AngleMap::h1(4);
        fine.refine(&[PatchId::octant(0)]);
        let coarse_maps = vec![coarse];
        let fine_maps = vec![fine];
        let cl = Layout::from_maps(&coarse_maps);
        let fl = Layout::from_maps(&fine_maps);
        let field: Vec<f64> = (0..8).map(|i| i as f64 + 1.0).collect();
        // Prolong then restrict is the identity for piecewise constants.
        let up = transfer_field(&coarse_maps, &cl, &field, &fine_maps, &fl);
        let back = transfer_field(&fine_maps, &fl, &up, &coarse_maps, &cl);
        for (a, b) in field.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn fixed_mode_runs_one_solve() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let mut cfg = AdaptConfig::new(
            RunMode::Fixed { phi_lo: 1.47976, phi_hi: 1.661832, mu_lo: 0.0, mu_hi: 1.0, level: 2 },
            1e-3,
            crate::mesh::REGION_DETECTOR,
        );
        cfg.max_level = 4;
        let mut steps_seen = 0;
        let out = run(&mesh, &cfg, |_| steps_seen += 1).unwrap();
        assert_eq!(steps_seen, 1);
        assert_eq!(out.records.len(), 1);
        assert!(out.records[0].detector.is_finite());
        assert!(out.records[0].ndof > 8 * 3 * mesh.triangles.len());
    }

    #[test]
    fn nonrobust_mode_smoke() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let mut cfg = AdaptConfig::new(RunMode::NonRobust, 1e-3, crate::mesh::REGION_DETECTOR);
        cfg.steps = 2;
        cfg.max_level = 3;
        let out = run(&mesh, &cfg, |_| {}).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.records[0].underresolved_pct.is_nan());
    }

    #[test]
    fn robust_mode_smoke() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let mut cfg = AdaptConfig::new(RunMode::Robust, 1e-3, crate::mesh::REGION_DETECTOR);
        cfg.steps = 3;
        cfg.max_level = 3;
        cfg.surrogate = FpnConfig::new(1, 1.0);
        cfg.reference = Some(0.05);
        let mut fractions = Vec::new();
        let out = run(&mesh, &cfg, |s| fractions.push(s.record.underresolved_pct)).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(fractions.iter().all(|f| f.is_finite()));
        // Maps stay well-formed after every step.
        for m in &out.maps {
            assert_eq!(m.function_count(), m.leaf_count());
        }
    }
}
