//! Built-in duct meshes: generation, validation and the tmesh file format.
//!
//! ```bash
//! cargo run --release --example duct_mesh
//! ```

use boltwave::mesh::{generate_duct, TriMesh, REGION_DETECTOR, REGION_SOURCE, REGION_VOID};

fn main() {
    for (length, width, h) in [(10.0, 1.0, 0.25), (100.0, 1.0, 0.25)] {
        let mesh = generate_duct(length, width, h).unwrap();
        println!(
            "duct({length}, {width}, {h}): {} vertices, {} triangles, total area {:.6}",
            mesh.vertices.len(),
            mesh.triangles.len(),
            mesh.total_area()
        );
        for (region, name) in [(REGION_SOURCE, "source"), (REGION_DETECTOR, "detector"), (REGION_VOID, "void")] {
            println!("  {name:>8}: area {:>10.6}", mesh.region_area(region));
        }
        let report = mesh.validate();
        println!("  validation: {} findings", report.len());
    }

    // Round-trip through the ASCII format.
    let mesh = generate_duct(10.0, 1.0, 0.5).unwrap();
    let text = mesh.to_ascii();
    println!("\ntmesh file preview:");
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    println!("  ...");
    let back = TriMesh::from_ascii(&text).unwrap();
    println!("loaded mesh identical to the original: {}", back == mesh);
}
