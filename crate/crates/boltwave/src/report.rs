//! VTK and CSV emission.
//!
//! VTK files are legacy ASCII unstructured grids with every DG node written
//! as its own point (duplicated per element corner), which is the natural
//! representation for discontinuous fields. The CSV schema is fixed:
//! `step,ndof,mean_angle_dofs,detector,rel_error,effectivity,underresolved_pct,wall_seconds`
//! with floats at 12 significant digits, so re-reading reproduces the record
//! to printed precision.

use crate::adapt::StepRecord;
use crate::mesh::TriMesh;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const CSV_HEADER: &str =
    "step,ndof,mean_angle_dofs,detector,rel_error,effectivity,underresolved_pct,wall_seconds";

fn fmt_g12(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// Point data lives on DG nodes (3 per triangle, order `3*elem + corner`);
/// cell data on triangles.
pub fn vtk_string(
    mesh: &TriMesh,
    point_fields: &[(&str, &[f64])],
    cell_fields: &[(&str, &[f64])],
) -> String {
    let n_elems = mesh.triangles.len();
    let n_points = 3 * n_elems;
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("boltwave transport fields\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n_points} double");
    for tri in &mesh.triangles {
        for &v in &tri.v {
            let p = mesh.vertices[v as usize];
            let _ = writeln!(s, "{} {} 0", fmt_g12(p[0]), fmt_g12(p[1]));
        }
    }
    let _ = writeln!(s, "CELLS {n_elems} {}", 4 * n_elems);
    for t in 0..n_elems {
        let _ = writeln!(s, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2);
    }
    let _ = writeln!(s, "CELL_TYPES {n_elems}");
    for _ in 0..n_elems {
        s.push_str("5\n");
    }
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n_points}");
        for (name, values) in point_fields {
            assert_eq!(values.len(), n_points, "field {name}");
            let _ = writeln!(s, "SCALARS {name} double 1");
            s.push_str("LOOKUP_TABLE default\n");
            for v in *values {
                let _ = writeln!(s, "{}", fmt_g12(*v));
            }
        }
    }
    if !cell_fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {n_elems}");
        for (name, values) in cell_fields {
            assert_eq!(values.len(), n_elems, "field {name}");
            let _ = writeln!(s, "SCALARS {name} double 1");
            s.push_str("LOOKUP_TABLE default\n");
            for v in *values {
                let _ = writeln!(s, "{}", fmt_g12(*v));
            }
        }
    }
    s
}

pub fn write_vtk(
    mesh: &TriMesh,
    point_fields: &[(&str, &[f64])],
    cell_fields: &[(&str, &[f64])],
    path: impl AsRef<Path>,
) -> io::Result<()> {
    std::fs::write(path, vtk_string(mesh, point_fields, cell_fields))
}

pub fn csv_string(records: &[StepRecord]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.step,
            r.ndof,
            fmt_g12(r.mean_angle_dofs),
            fmt_g12(r.detector),
            fmt_g12(r.rel_error),
            fmt_g12(r.effectivity),
            fmt_g12(r.underresolved_pct),
            fmt_g12(r.wall_seconds),
        );
    }
    s
}

pub fn write_csv(records: &[StepRecord], path: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(path, csv_string(records))
}

pub fn read_csv(text: &str) -> Result<Vec<StepRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    if header != CSV_HEADER {
        return Err(format!("unexpected header: {header}"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(format!("row {}: expected 8 columns, got {}", i + 2, cols.len()));
        }
        let f = |s: &str| -> Result<f64, String> {
            s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2))
        };
        out.push(StepRecord {
            step: cols[0].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            ndof: cols[1].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            mean_angle_dofs: f(cols[2])?,
            detector: f(cols[3])?,
            rel_error: f(cols[4])?,
            effectivity: f(cols[5])?,
            underresolved_pct: f(cols[6])?,
            wall_seconds: f(cols[7])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_duct;

    fn sample_records() -> Vec<StepRecord> {
        vec![
            StepRecord {
                step: 1,
                ndof: 4608,
                mean_angle_dofs: 8.0,
                detector: 1.234567890123e-4,
                rel_error: 0.5,
                effectivity: 1.03,
                underresolved_pct: 100.0,
                wall_seconds: 2.25,
            },
            StepRecord {
                step: 2,
                ndof: 6000,
                mean_angle_dofs: 10.41666,
                detector: 3.3e-4,
                rel_error: f64::NAN,
                effectivity: f64::NAN,
                underresolved_pct: 71.0,
                wall_seconds: 4.5,
            },
        ]
    }

    #[test]
    fn vtk_header_and_sizes() {
        let mesh = generate_duct(2.0, 1.0, 0.5).unwrap();
        let phi = vec![1.0; 3 * mesh.triangles.len()];
        let region: Vec<f64> = mesh.triangles.iter().map(|t| t.region as f64).collect();
        let text = vtk_string(&mesh, &[("scalar_flux", &phi)], &[("region", &region)]);
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains(&format!("POINTS {} double", 3 * mesh.triangles.len())));
        assert!(text.contains("SCALARS scalar_flux double 1"));
        assert!(text.contains("SCALARS region double 1"));
    }

    #[test]
    fn csv_roundtrip_to_printed_precision() {
        let records = sample_records();
        let text = csv_string(&records);
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 1 + records.len());
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.step, b.step);
            assert_eq!(a.ndof, b.ndof);
            for (x, y) in [
                (a.mean_angle_dofs, b.mean_angle_dofs),
                (a.detector, b.detector),
                (a.rel_error, b.rel_error),
                (a.effectivity, b.effectivity),
                (a.underresolved_pct, b.underresolved_pct),
                (a.wall_seconds, b.wall_seconds),
            ] {
                if x.is_nan() {
                    assert!(y.is_nan());
                } else {
                    let tol = 1e-11 * x.abs().max(1e-300);
                    assert!((x - y).abs() <= tol, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        assert!(read_csv("bogus header\n1,2").is_err());
        let text = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(read_csv(&text).is_err());
    }
}
