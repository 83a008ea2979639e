//! Triangle surface meshes and the RWG basis built on them.

pub mod fixtures;
pub mod io;
mod rwg;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::{Error, Result};

pub use io::{load_mesh, write_mesh, MeshFormat};
pub use rwg::{build_rwg, RwgBasis, RwgFunction, TriangleSupport};

pub type Vec3 = Vector3<f64>;

/// Validated triangle surface in meters.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Unit normals from the triangle winding (right-hand rule).
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
}

impl SurfaceMesh {
    /// Validates and builds a mesh. Rejects zero-area triangles, coincident
    /// vertices and neighbours whose windings disagree.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references vertex beyond {nv}"
                )));
            }
        }
        let diag = bbox_diagonal(&vertices);
        check_duplicates(&vertices, 1e-10 * diag.max(f64::MIN_POSITIVE))?;

        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cr = (b - a).cross(&(c - a));
            let area = 0.5 * cr.norm();
            if area <= 1e-14 * diag * diag || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
            normals.push(cr / (2.0 * area));
            areas.push(area);
        }
        let mesh = Self {
            vertices,
            triangles,
            normals,
            areas,
        };
        mesh.check_orientation()?;
        Ok(mesh)
    }

    /// Undirected edges mapped to the triangles using them, in triangle order,
    /// each with a flag telling whether the triangle runs `lo → hi`.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<(usize, bool)>> {
        let mut map: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                map.entry(key).or_default().push((t, a < b));
            }
        }
        map
    }

    fn check_orientation(&self) -> Result<()> {
        let mut edges: Vec<_> = self.edge_map().into_iter().collect();
        edges.sort_by_key(|e| e.0);
        for ((v1, v2), users) in edges {
            // non-manifold edges are reported by build_rwg
            if users.len() == 2 && users[0].1 == users[1].1 {
                return Err(Error::InconsistentOrientation {
                    t1: users[0].0,
                    t2: users[1].0,
                    v1,
                    v2,
                });
            }
        }
        Ok(())
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        (a + b + c) / 3.0
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bbox(&self.vertices)
    }

    /// Length statistics over all distinct edges: `(min, mean, max)`.
    pub fn edge_length_stats(&self) -> (f64, f64, f64) {
        let mut lengths = self
            .edge_map()
            .keys()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .collect::<Vec<_>>();
        lengths.sort_by(f64::total_cmp);
        let mean = lengths.iter().sum::<f64>() / lengths.len().max(1) as f64;
        (
            lengths.first().copied().unwrap_or(0.0),
            mean,
            lengths.last().copied().unwrap_or(0.0),
        )
    }

    /// Returns a copy with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.vertices.iter().map(|v| v * c).collect(),
            self.triangles.clone(),
        )
    }
}

fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

fn check_duplicates(points: &[Vec3], tol: f64) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            if points[j].x - points[i].x > tol {
                break;
            }
            if (points[j] - points[i]).norm() <= tol {
                return Err(Error::DuplicateVertex {
                    a: i.min(j),
                    b: i.max(j),
                });
            }
        }
    }
    Ok(())
}

/// Summary printed by the mesh-stats command.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MeshStats {
    pub unknowns: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub edge_min: f64,
    pub edge_mean: f64,
    pub edge_max: f64,
    /// Largest bounding-box extent in wavelengths.
    pub size_wavelengths: f64,
    /// `k·a` with `a` the radius of the bounding sphere about the box center.
    pub ka: f64,
    /// Mean edge length in wavelengths.
    pub edge_mean_wavelengths: f64,
}

pub fn mesh_stats(mesh: &SurfaceMesh, basis: &RwgBasis, freq_hz: f64) -> MeshStats {
    let (emin, emean, emax) = mesh.edge_length_stats();
    let lambda = crate::wavelength(freq_hz);
    let (lo, hi) = mesh.bounding_box();
    let center = (lo + hi) / 2.0;
    let radius = mesh
        .vertices
        .iter()
        .map(|v| (v - center).norm())
        .fold(0.0, f64::max);
    MeshStats {
        unknowns: basis.len(),
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        edge_min: emin,
        edge_mean: emean,
        edge_max: emax,
        size_wavelengths: (hi - lo).max() / lambda,
        ka: crate::wavenumber(freq_hz) * radius,
        edge_mean_wavelengths: emean / lambda,
    }
}
