//! 2D conforming triangular meshes with region and boundary tags, a built-in
//! generator for straight source/detector ducts, and a line-oriented ASCII
//! file format.
//!
//! File format (all indices 0-based):
//!
//! ```text
//! tmesh 1
//! vertices K
//! x y                      # K lines
//! triangles M
//! v0 v1 v2 region          # M lines
//! boundary B
//! v0 v1 tag                # B lines
//! region R sigma_t sigma_s source   # one line per region
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target edge length {h} must be positive and smaller than {limit} so the end regions stay resolved")]
    UnresolvedRegions { h: f64, limit: f64 },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh failed validation:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// Region material data. `source` is the isotropic emission density per unit
/// solid angle (so the angle-integrated emission density is `4 pi * source`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub sigma_t: f64,
    pub sigma_s: f64,
    pub source: f64,
}

impl Material {
    pub const VACUUM: Material = Material { sigma_t: 0.0, sigma_s: 0.0, source: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub v: [u32; 3],
    pub region: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [u32; 2],
    pub tag: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub regions: BTreeMap<u32, Material>,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoElements,
    DanglingVertex { triangle: usize, vertex: u32 },
    NonPositiveOrientation { triangle: usize, area2: f64 },
    NonConformingEdge { v: [u32; 2], count: usize },
    BoundaryMismatch { v: [u32; 2] },
    MissingRegion { triangle: usize, region: u32 },
    NegativeCrossSection { region: u32 },
    ScatterExceedsTotal { region: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NoElements => write!(f, "no elements"),
            Violation::DanglingVertex { triangle, vertex } => {
                write!(f, "triangle {triangle} references missing vertex {vertex}")
            }
            Violation::NonPositiveOrientation { triangle, area2 } => {
                write!(f, "triangle {triangle} is not positively oriented (2*area = {area2})")
            }
            Violation::NonConformingEdge { v, count } => {
                write!(f, "edge ({}, {}) is shared by {count} triangles", v[0], v[1])
            }
            Violation::BoundaryMismatch { v } => {
                write!(f, "boundary edge list disagrees with topology at edge ({}, {})", v[0], v[1])
            }
            Violation::MissingRegion { triangle, region } => {
                write!(f, "triangle {triangle} references region {region} with no material entry")
            }
            Violation::NegativeCrossSection { region } => {
                write!(f, "region {region} has a negative cross-section")
            }
            Violation::ScatterExceedsTotal { region } => {
                write!(f, "region {region} has sigma_s > sigma_t")
            }
        }
    }
}

pub const REGION_VOID: u32 = 0;
pub const REGION_SOURCE: u32 = 1;
pub const REGION_DETECTOR: u32 = 2;

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let tri = &self.triangles[t];
        let a = self.vertices[tri.v[0] as usize];
        let b = self.vertices[tri.v[1] as usize];
        let c = self.vertices[tri.v[2] as usize];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn region_area(&self, region: u32) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].region == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn material(&self, region: u32) -> Material {
        *self.regions.get(&region).unwrap_or(&Material::VACUUM)
    }

    /// Check every structural invariant and list all findings.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.triangles.is_empty() {
            out.push(Violation::NoElements);
        }
        let nv = self.vertices.len() as u32;
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in &tri.v {
                if v >= nv {
                    out.push(Violation::DanglingVertex { triangle: t, vertex: v });
                }
            }
        }
        // Orientation (skip triangles with dangling vertices).
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.v.iter().all(|&v| v < nv) {
                let area2 = 2.0 * self.triangle_area(t);
                if area2 <= 0.0 {
                    out.push(Violation::NonPositiveOrientation { triangle: t, area2 });
                }
            }
            if !self.regions.contains_key(&tri.region) {
                out.push(Violation::MissingRegion { triangle: t, region: tri.region });
            }
        }
        // Edge conformity.
        let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for tri in &self.triangles {
            if tri.v.iter().any(|&v| v >= nv) {
                continue;
            }
            for e in 0..3 {
                let a = tri.v[e];
                let b = tri.v[(e + 1) % 3];
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut listed: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for be in &self.boundary_edges {
            *listed.entry((be.v[0].min(be.v[1]), be.v[0].max(be.v[1]))).or_insert(0) += 1;
        }
        for (&e, &c) in &counts {
            match c {
                1 => {
                    if listed.get(&e) != Some(&1) {
                        out.push(Violation::BoundaryMismatch { v: [e.0, e.1] });
                    }
                }
                2 => {
                    if listed.contains_key(&e) {
                        out.push(Violation::BoundaryMismatch { v: [e.0, e.1] });
                    }
                }
                c => out.push(Violation::NonConformingEdge { v: [e.0, e.1], count: c }),
            }
        }
        for (&e, _) in &listed {
            if !counts.contains_key(&e) {
                out.push(Violation::BoundaryMismatch { v: [e.0, e.1] });
            }
        }
        // Materials.
        for (&r, mat) in &self.regions {
            if mat.sigma_t < 0.0 || mat.sigma_s < 0.0 {
                out.push(Violation::NegativeCrossSection { region: r });
            } else if mat.sigma_s > mat.sigma_t {
                out.push(Violation::ScatterExceedsTotal { region: r });
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        s.push_str("tmesh 1\n");
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {} {}", t.v[0], t.v[1], t.v[2], t.region);
        }
        let _ = writeln!(s, "boundary {}", self.boundary_edges.len());
        for b in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", b.v[0], b.v[1], b.tag);
        }
        for (r, m) in &self.regions {
            let _ = writeln!(s, "region {} {} {} {}", r, m.sigma_t, m.sigma_s, m.source);
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_ascii(&text)
    }

    pub fn from_ascii(text: &str) -> Result<TriMesh, MeshError> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: String| MeshError::Parse { line: line + 1, msg };
        fn next_content<'a>(lines: &mut std::iter::Enumerate<std::str::Lines<'a>>) -> Option<(usize, &'a str)> {
            for (i, l) in lines.by_ref() {
                let t = l.trim();
                if !t.is_empty() && !t.starts_with('#') {
                    return Some((i, t));
                }
            }
            None
        }

        let (hl, header) =
            next_content(&mut lines).ok_or_else(|| perr(0, "empty file".into()))?;
        if header != "tmesh 1" {
            return Err(perr(hl, format!("expected header 'tmesh 1', found '{header}'")));
        }

        let parse_count = |line: usize, text: &str, kw: &str| -> Result<usize, MeshError> {
            let mut it = text.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(k), Some(n), None) if k == kw => n
                    .parse()
                    .map_err(|_| perr(line, format!("bad {kw} count '{n}'"))),
                _ => Err(perr(line, format!("expected '{kw} <count>', found '{text}'"))),
            }
        };

        let (vl, vline) = next_content(&mut lines).ok_or_else(|| perr(hl, "missing vertices section".into()))?;
        let nv = parse_count(vl, vline, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, t) = next_content(&mut lines).ok_or_else(|| perr(vl, "truncated vertex section".into()))?;
            let mut it = t.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| perr(l, format!("bad vertex line '{t}'")))?;
            let y: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| perr(l, format!("bad vertex line '{t}'")))?;
            if it.next().is_some() {
                return Err(perr(l, format!("trailing tokens on vertex line '{t}'")));
            }
            vertices.push([x, y]);
        }

        let (tl, tline) = next_content(&mut lines).ok_or_else(|| perr(vl, "missing triangles section".into()))?;
        let nt = parse_count(tl, tline, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (l, t) = next_content(&mut lines).ok_or_else(|| perr(tl, "truncated triangle section".into()))?;
            let vals: Vec<u32> = t
                .split_whitespace()
                .map(|s| s.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| perr(l, format!("bad triangle line '{t}'")))?;
            if vals.len() != 4 {
                return Err(perr(l, format!("expected 'v0 v1 v2 region', found '{t}'")));
            }
            for &v in &vals[..3] {
                if v as usize >= nv {
                    return Err(perr(l, format!("triangle references vertex {v} but only {nv} vertices exist")));
                }
            }
            triangles.push(Triangle { v: [vals[0], vals[1], vals[2]], region: vals[3] });
        }

        let (bl, bline) = next_content(&mut lines).ok_or_else(|| perr(tl, "missing boundary section".into()))?;
        let nb = parse_count(bl, bline, "boundary")?;
        let mut boundary_edges = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (l, t) = next_content(&mut lines).ok_or_else(|| perr(bl, "truncated boundary section".into()))?;
            let vals: Vec<u32> = t
                .split_whitespace()
                .map(|s| s.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| perr(l, format!("bad boundary line '{t}'")))?;
            if vals.len() != 3 {
                return Err(perr(l, format!("expected 'v0 v1 tag', found '{t}'")));
            }
            for &v in &vals[..2] {
                if v as usize >= nv {
                    return Err(perr(l, format!("boundary edge references vertex {v} but only {nv} vertices exist")));
                }
            }
            boundary_edges.push(BoundaryEdge { v: [vals[0], vals[1]], tag: vals[2] });
        }

        let mut regions = BTreeMap::new();
        while let Some((l, t)) = next_content(&mut lines) {
            let mut it = t.split_whitespace();
            if it.next() != Some("region") {
                return Err(perr(l, format!("expected 'region <id> <sigma_t> <sigma_s> <source>', found '{t}'")));
            }
            let vals: Vec<&str> = it.collect();
            if vals.len() != 4 {
                return Err(perr(l, format!("expected 4 region values, found '{t}'")));
            }
            let id: u32 = vals[0].parse().map_err(|_| perr(l, format!("bad region id '{}'", vals[0])))?;
            let nums: Vec<f64> = vals[1..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| perr(l, format!("bad region values '{t}'")))?;
            regions.insert(id, Material { sigma_t: nums[0], sigma_s: nums[1], source: nums[2] });
        }

        let mesh = TriMesh { vertices, triangles, boundary_edges, regions };
        let violations = mesh.validate();
        if violations.is_empty() {
            Ok(mesh)
        } else {
            Err(MeshError::Invalid(violations))
        }
    }
}

/// Break `[0, total]` into spans at most `h` wide, forcing cut points so the
/// end boxes are exact region boundaries.
fn spans(total: f64, h: f64, cuts: &[f64]) -> Vec<f64> {
    let mut points = vec![0.0];
    let mut segs: Vec<(f64, f64)> = Vec::new();
    let mut prev = 0.0;
    for &c in cuts {
        if c > prev && c < total {
            segs.push((prev, c));
            prev = c;
        }
    }
    segs.push((prev, total));
    for (a, b) in segs {
        let n = ((b - a) / h).ceil().max(1.0) as usize;
        for k in 1..=n {
            points.push(a + (b - a) * k as f64 / n as f64);
        }
    }
    points
}

/// Structured crossed-triangle duct: a `width x (length+2)` rectangle with
/// the duct axis along +y. The bottom 1x1 box is an isotropic unit-strength
/// source (angular density `1/(4 pi)`), the top 1x1 box is the detector
/// region, everything is vacuum, and all outer edges carry the vacuum-inflow
/// tag 0. Cell pitch never exceeds `h` and the box edges fall on mesh lines,
/// so region areas are exact.
pub fn generate_duct(length: f64, width: f64, h: f64) -> Result<TriMesh, MeshError> {
    if length <= 0.0 || width <= 0.0 || h <= 0.0 || h >= width.min(1.0) {
        return Err(MeshError::UnresolvedRegions { h, limit: width.min(1.0) });
    }
    let total = length + 2.0;
    let xs = spans(width, h, &[1.0]);
    let ys = spans(total, h, &[1.0, length + 1.0]);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for y in &ys {
        for x in &xs {
            vertices.push([*x, *y]);
        }
    }
    let grid = |i: usize, j: usize| -> u32 { (j * (nx + 1) + i) as u32 };
    let box_x = width.min(1.0);

    let mut triangles = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let xc = 0.5 * (xs[i] + xs[i + 1]);
            let yc = 0.5 * (ys[j] + ys[j + 1]);
            let region = if yc < 1.0 && xc < box_x {
                REGION_SOURCE
            } else if yc > length + 1.0 && xc < box_x {
                REGION_DETECTOR
            } else {
                REGION_VOID
            };
            let center = vertices.len() as u32;
            vertices.push([xc, yc]);
            let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            triangles.push(Triangle { v: [a, b, center], region });
            triangles.push(Triangle { v: [b, c, center], region });
            triangles.push(Triangle { v: [c, d, center], region });
            triangles.push(Triangle { v: [d, a, center], region });
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [grid(i, 0), grid(i + 1, 0)], tag: 0 });
        boundary_edges.push(BoundaryEdge { v: [grid(i, ny), grid(i + 1, ny)], tag: 0 });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [grid(0, j), grid(0, j + 1)], tag: 0 });
        boundary_edges.push(BoundaryEdge { v: [grid(nx, j), grid(nx, j + 1)], tag: 0 });
    }

    let mut regions = BTreeMap::new();
    regions.insert(REGION_VOID, Material::VACUUM);
    regions.insert(
        REGION_SOURCE,
        Material { sigma_t: 0.0, sigma_s: 0.0, source: 1.0 / (4.0 * std::f64::consts::PI) },
    );
    regions.insert(REGION_DETECTOR, Material::VACUUM);

    Ok(TriMesh { vertices, triangles, boundary_edges, regions })
}

/// Uniform single-region rectangle, used by verification problems.
pub fn generate_rect(width: f64, height: f64, h: f64, material: Material) -> Result<TriMesh, MeshError> {
    if width <= 0.0 || height <= 0.0 || h <= 0.0 {
        return Err(MeshError::UnresolvedRegions { h, limit: width.min(height) });
    }
    let xs = spans(width, h, &[]);
    let ys = spans(height, h, &[]);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let mut vertices = Vec::new();
    for y in &ys {
        for x in &xs {
            vertices.push([*x, *y]);
        }
    }
    let grid = |i: usize, j: usize| -> u32 { (j * (nx + 1) + i) as u32 };
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let center = vertices.len() as u32;
            vertices.push([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]);
            let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            triangles.push(Triangle { v: [a, b, center], region: 0 });
            triangles.push(Triangle { v: [b, c, center], region: 0 });
            triangles.push(Triangle { v: [c, d, center], region: 0 });
            triangles.push(Triangle { v: [d, a, center], region: 0 });
        }
    }
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [grid(i, 0), grid(i + 1, 0)], tag: 0 });
        boundary_edges.push(BoundaryEdge { v: [grid(i, ny), grid(i + 1, ny)], tag: 0 });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [grid(0, j), grid(0, j + 1)], tag: 0 });
        boundary_edges.push(BoundaryEdge { v: [grid(nx, j), grid(nx, j + 1)], tag: 0 });
    }
    let mut regions = BTreeMap::new();
    regions.insert(0, material);
    Ok(TriMesh { vertices, triangles, boundary_edges, regions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duct10_measures() {
        let m = generate_duct(10.0, 1.0, 0.25).unwrap();
        assert!((m.total_area() - 12.0).abs() < 1e-12);
        assert!((m.region_area(REGION_SOURCE) - 1.0).abs() < 1e-12);
        assert!((m.region_area(REGION_DETECTOR) - 1.0).abs() < 1e-12);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn duct100_measure() {
        let m = generate_duct(100.0, 1.0, 0.25).unwrap();
        assert!((m.total_area() - 102.0).abs() < 1e-12);
    }

    #[test]
    fn awkward_pitch_still_exact() {
        let m = generate_duct(10.37, 1.4, 0.3).unwrap();
        assert!((m.total_area() - 12.37 * 1.4).abs() < 1e-11);
        assert!((m.region_area(REGION_SOURCE) - 1.0).abs() < 1e-12);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn refuses_unresolved_regions() {
        assert!(generate_duct(10.0, 1.0, 1.0).is_err());
        assert!(generate_duct(10.0, 0.5, 0.6).is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let m = generate_duct(10.0, 1.0, 0.5).unwrap();
        let text = m.to_ascii();
        let back = TriMesh::from_ascii(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn dangling_vertex_errors_with_line() {
        let text = "tmesh 1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 5 0\nboundary 0\nregion 0 0 0 0\n";
        match TriMesh::from_ascii(text) {
            Err(MeshError::Parse { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains("vertex 5"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_triangle_section_is_invalid() {
        let text = "tmesh 1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 0\nboundary 0\nregion 0 0 0 0\n";
        match TriMesh::from_ascii(text) {
            Err(MeshError::Invalid(v)) => {
                assert!(v.contains(&Violation::NoElements));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn flipped_triangle_is_one_violation() {
        let mut m = generate_duct(10.0, 1.0, 0.5).unwrap();
        m.triangles[3].v.swap(0, 1);
        let report = m.validate();
        let flips: Vec<_> = report
            .iter()
            .filter(|v| matches!(v, Violation::NonPositiveOrientation { .. }))
            .collect();
        assert_eq!(flips.len(), 1);
    }

    #[test]
    fn scatter_violation_names_region() {
        let mut m = generate_duct(10.0, 1.0, 0.5).unwrap();
        m.regions.insert(7, Material { sigma_t: 1.0, sigma_s: 2.0, source: 0.0 });
        let report = m.validate();
        assert!(report.contains(&Violation::ScatterExceedsTotal { region: 7 }));
    }

    #[test]
    fn generated_meshes_validate_clean() {
        for (len, w, h) in [(10.0, 1.0, 0.5), (10.0, 1.0, 0.125), (100.0, 1.0, 0.25), (4.0, 2.0, 0.33)] {
            let m = generate_duct(len, w, h).unwrap();
            assert!(m.validate().is_empty(), "duct({len},{w},{h})");
        }
    }
}
