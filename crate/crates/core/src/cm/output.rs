//! Eigenvalue CSV, mode JSON and legacy VTK surface currents.

use std::io::Write;
use std::path::Path;

use super::CmSolution;
use crate::mesh::{RwgBasis, SurfaceMesh};
use crate::{Error, Result, C64};

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub const EIGEN_CSV_HEADER: &str =
    "frequency_hz,mode,lambda,mu_abs,realness,residual,outer_iterations,inner_iterations";

/// One row per mode per solution; modes are numbered from 1.
pub fn write_eigen_csv(solutions: &[CmSolution], path: impl AsRef<Path>) -> Result<()> {
    let mut s = format!("{EIGEN_CSV_HEADER}\n");
    for sol in solutions {
        for (i, m) in sol.modes.iter().enumerate() {
            s += &format!(
                "{},{},{:.10e},{:.10e},{:.3e},{:.3e},{},{}\n",
                sol.freq_hz,
                i + 1,
                m.lambda,
                m.mu.norm(),
                m.realness,
                m.residual,
                sol.outer_iterations,
                sol.inner_iterations
            );
        }
    }
    write_file(path.as_ref(), &s)
}

/// Mode currents as `{"frequency_hz", "modes": [{"index", "lambda",
/// "coefficients": [[re, im], ...]}]}`; coefficient `n` belongs to RWG edge `n`.
pub fn write_modes_json(sol: &CmSolution, path: impl AsRef<Path>) -> Result<()> {
    let modes: Vec<serde_json::Value> = sol
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            serde_json::json!({
                "index": i + 1,
                "lambda": m.lambda,
                "normalized": m.normalized,
                "coefficients": m.current.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let v = serde_json::json!({ "frequency_hz": sol.freq_hz, "modes": modes });
    write_file(path.as_ref(), &serde_json::to_string(&v).expect("serializable"))
}

/// Per-triangle `|J|` at the centroid for each mode.
pub fn triangle_magnitudes(mesh: &SurfaceMesh, basis: &RwgBasis, current: &[C64]) -> Vec<f64> {
    (0..mesh.triangles.len())
        .map(|t| {
            let c = mesh.centroid(t);
            let mut re = nalgebra::Vector3::zeros();
            let mut im = nalgebra::Vector3::zeros();
            for &(n, _, _) in &basis.triangle_functions[t] {
                let f = basis.eval(mesh, n, t, &c);
                re += f * current[n].re;
                im += f * current[n].im;
            }
            (re.norm_squared() + im.norm_squared()).sqrt()
        })
        .collect()
}

/// Legacy ASCII VTK polydata with one cell scalar per mode.
pub fn write_vtk(mesh: &SurfaceMesh, basis: &RwgBasis, sol: &CmSolution, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("# vtk DataFile Version 3.0\ncharacteristic mode currents\nASCII\nDATASET POLYDATA\n");
    s += &format!("POINTS {} double\n", mesh.vertices.len());
    for v in &mesh.vertices {
        s += &format!("{} {} {}\n", v.x, v.y, v.z);
    }
    s += &format!("POLYGONS {} {}\n", mesh.triangles.len(), 4 * mesh.triangles.len());
    for t in &mesh.triangles {
        s += &format!("3 {} {} {}\n", t[0], t[1], t[2]);
    }
    s += &format!("CELL_DATA {}\n", mesh.triangles.len());
    for (i, m) in sol.modes.iter().enumerate() {
        s += &format!("SCALARS J{}_magnitude double 1\nLOOKUP_TABLE default\n", i + 1);
        for v in triangle_magnitudes(mesh, basis, &m.current) {
            s += &format!("{v:e}\n");
        }
    }
    write_file(path.as_ref(), &s)
}
