//! Mesh and octree statistics of the reference plate at 300 MHz.

use charmode::driver::mesh_report;
use charmode::mesh::fixtures;

fn main() -> charmode::Result<()> {
    let report = mesh_report(&fixtures::reference_plate(), 300e6, 0.25)?;
    let m = &report.mesh;
    println!("{} unknowns, {} triangles, mean edge {:.3}λ", m.unknowns, m.triangles, m.edge_mean_wavelengths);
    if let Some(t) = &report.tree {
        println!("{}", serde_json::to_string_pretty(t).expect("serializable"));
    }
    Ok(())
}
