//! Batch-run plumbing behind the `boltwave` binary: execute a TOML config,
//! write per-step VTK files and the run CSV, run the verification suite,
//! generate and check meshes.

use crate::adapt::{run, AdaptConfig, DriverError, RunMode, StepRecord};
use crate::config::{ConfigError, RunSpec, TimingSpec, WindowSpec};
use crate::mesh::{generate_duct, MeshError, TriMesh};
use crate::report::{write_csv, write_vtk};
use crate::verify::{run_checks, VerifyFault};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh failed validation:\n{0}")]
    InvalidMesh(String),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub struct RunSummary {
    pub records: Vec<StepRecord>,
    pub reference: Option<f64>,
    pub csv_path: Option<PathBuf>,
}

/// Execute a run config end to end.
pub fn cmd_run(config_path: &Path) -> Result<RunSummary, CliError> {
    let spec = RunSpec::load(config_path)?;
    let mesh = spec.build_mesh()?;
    let violations = mesh.validate();
    if !violations.is_empty() {
        let text = violations.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n");
        return Err(CliError::InvalidMesh(text));
    }

    // Resolve the reference detector value, solving a fixed-refinement
    // problem first when the config asks for one.
    let reference = match (spec.goal.reference, &spec.goal.fixed_reference) {
        (Some(v), _) => Some(v),
        (None, Some(w)) => {
            eprintln!(
                "computing fixed-refinement reference (level {}, phi [{}, {}])...",
                w.level, w.phi_lo, w.phi_hi
            );
            let value = fixed_reference_detector(&mesh, &spec, w)?;
            eprintln!("reference detector = {value:.12e}");
            Some(value)
        }
        (None, None) => None,
    };

    let out_dir = spec.output.dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Io { path: out_dir.clone(), source })?;

    let cfg = spec.adapt_config(reference);
    let mut step_errors: Vec<std::io::Error> = Vec::new();
    let outcome = run(&mesh, &cfg, |step| {
        println!(
            "step {:>2}: ndof {:>9}  detector {: >17.10e}  rel_error {:<12}  underresolved {:>6}%",
            step.record.step,
            step.record.ndof,
            step.record.detector,
            if step.record.rel_error.is_nan() {
                "-".to_string()
            } else {
                format!("{:.4e}", step.record.rel_error)
            },
            if step.record.underresolved_pct.is_nan() {
                "-".to_string()
            } else {
                format!("{:.1}", step.record.underresolved_pct)
            },
        );
        if spec.output.vtk {
            let funcs_f64: Vec<f64> = step.functions_per_node.iter().map(|&c| c as f64).collect();
            let flags_f64: Vec<f64> = match step.underresolved {
                Some(flags) => flags.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
                None => vec![0.0; step.scalar_flux.len()],
            };
            let region: Vec<f64> = step.mesh.triangles.iter().map(|t| t.region as f64).collect();
            let path = out_dir.join(format!("step_{:03}.vtk", step.record.step));
            let fields: [(&str, &[f64]); 3] = [
                ("scalar_flux", step.scalar_flux),
                ("angle_functions", &funcs_f64),
                ("underresolved", &flags_f64),
            ];
            if let Err(e) = write_vtk(step.mesh, &fields, &[("region", &region)], &path) {
                step_errors.push(e);
            }
        }
    })?;
    if let Some(source) = step_errors.into_iter().next() {
        return Err(CliError::Io { path: out_dir.clone(), source });
    }

    let mut records = outcome.records;
    if spec.output.timing == TimingSpec::None {
        for r in &mut records {
            r.wall_seconds = 0.0;
        }
    }
    let csv_path = if spec.output.csv {
        let path = out_dir.join("record.csv");
        write_csv(&records, &path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Some(path)
    } else {
        None
    };

    Ok(RunSummary { records, reference, csv_path })
}

/// One fixed-refinement solve used as the error reference for a run.
pub fn fixed_reference_detector(
    mesh: &TriMesh,
    spec: &RunSpec,
    w: &WindowSpec,
) -> Result<f64, CliError> {
    let mut cfg = AdaptConfig::new(
        RunMode::Fixed {
            phi_lo: w.phi_lo,
            phi_hi: w.phi_hi,
            mu_lo: w.mu_lo,
            mu_hi: w.mu_hi,
            level: w.level,
        },
        spec.adapt.tau,
        spec.goal.region,
    );
    cfg.max_level = spec.angle.max_level.max(w.level);
    cfg.solver = spec.solver_options();
    let outcome = run(mesh, &cfg, |_| {})?;
    Ok(outcome.records[0].detector)
}

/// Run the verification suite, printing one line per check. Returns whether
/// everything passed.
pub fn cmd_verify(fault: VerifyFault) -> bool {
    let results = run_checks(fault);
    let mut ok = true;
    for r in &results {
        println!("{} {:<34} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    ok
}

pub fn cmd_mesh_gen(out: &Path, length: f64, width: f64, h: f64) -> Result<(), CliError> {
    let mesh = generate_duct(length, width, h)?;
    mesh.save(out)?;
    println!(
        "wrote {} ({} vertices, {} triangles, area {:.6})",
        out.display(),
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.total_area()
    );
    Ok(())
}

pub fn cmd_mesh_check(path: &Path) -> Result<bool, CliError> {
    let mesh = TriMesh::load(path)?;
    let violations = mesh.validate();
    if violations.is_empty() {
        println!(
            "{}: ok ({} vertices, {} triangles, {} regions)",
            path.display(),
            mesh.vertices.len(),
            mesh.triangles.len(),
            mesh.regions.len()
        );
        Ok(true)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Ok(false)
    }
}
