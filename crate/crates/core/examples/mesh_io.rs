//! Exports the built-in meshes as OFF files and reads them back.
//!
//! `cargo run --release --example mesh_io -- <dir>` (default `data`).

use charmode::mesh::{build_rwg, fixtures, load_mesh, mesh_stats, write_mesh, MeshFormat};

fn main() -> charmode::Result<()> {
    let dir = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir).map_err(|e| charmode::Error::io(&dir, e))?;
    for (name, mesh) in [("plate", fixtures::reference_plate()), ("sphere", fixtures::reference_sphere())] {
        let path = dir.join(format!("{name}.off"));
        write_mesh(&mesh, &path, MeshFormat::Off)?;
        let back = load_mesh(&path, MeshFormat::Off)?;
        let basis = build_rwg(&back)?;
        let s = mesh_stats(&back, &basis, 300e6);
        println!("{}: {} triangles, {} unknowns, mean edge {:.4} m", path.display(), back.triangles.len(), basis.len(), s.edge_mean);
    }
    Ok(())
}
