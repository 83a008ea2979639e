use super::{SurfaceMesh, Vec3};
use crate::{Error, Result};

/// One half of an RWG function: the triangle, its free vertex and the sign.
#[derive(Clone, Copy, Debug)]
pub struct TriangleSupport {
    pub triangle: usize,
    /// Vertex opposite the shared edge.
    pub free_vertex: usize,
    /// +1 on T⁺, −1 on T⁻.
    pub sign: f64,
}

/// RWG function on an interior edge.
///
/// Convention: the edge is stored as `(v_lo, v_hi)` with `v_lo < v_hi`; T⁺ is
/// the triangle whose winding runs `v_lo → v_hi`. Current flows from T⁺ into
/// T⁻: `f = ℓ/(2A⁺)·(r − p⁺)` on T⁺ and `f = ℓ/(2A⁻)·(p⁻ − r)` on T⁻, so the
/// normal component across the edge is 1 on both sides.
#[derive(Clone, Debug)]
pub struct RwgFunction {
    pub edge: (usize, usize),
    pub length: f64,
    pub plus: TriangleSupport,
    pub minus: TriangleSupport,
}

impl RwgFunction {
    pub fn supports(&self) -> [TriangleSupport; 2] {
        [self.plus, self.minus]
    }
}

#[derive(Clone, Debug)]
pub struct RwgBasis {
    pub functions: Vec<RwgFunction>,
    /// Per triangle: `(basis index, local free-vertex slot 0..3, sign)`.
    pub triangle_functions: Vec<Vec<(usize, usize, f64)>>,
    /// Shared-edge midpoints, used for box membership.
    pub centroids: Vec<Vec3>,
}

impl RwgBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Evaluates `f_n(r)` for a point `r` in triangle `t` (zero elsewhere).
    pub fn eval(&self, mesh: &SurfaceMesh, n: usize, t: usize, r: &Vec3) -> Vec3 {
        let f = &self.functions[n];
        for s in f.supports() {
            if s.triangle == t {
                let p = mesh.vertices[s.free_vertex];
                return s.sign * f.length / (2.0 * mesh.areas[t]) * (r - p);
            }
        }
        Vec3::zeros()
    }

    /// Surface divergence of `f_n` on triangle `t`: `±ℓ/A`.
    pub fn divergence(&self, mesh: &SurfaceMesh, n: usize, t: usize) -> f64 {
        let f = &self.functions[n];
        f.supports()
            .iter()
            .find(|s| s.triangle == t)
            .map_or(0.0, |s| s.sign * f.length / mesh.areas[t])
    }
}

/// One RWG function per interior edge, ordered by `(v_lo, v_hi)`.
pub fn build_rwg(mesh: &SurfaceMesh) -> Result<RwgBasis> {
    let mut edges: Vec<_> = mesh.edge_map().into_iter().collect();
    edges.sort_by_key(|e| e.0);
    let mut functions = Vec::new();
    let mut triangle_functions = vec![Vec::new(); mesh.triangles.len()];
    let mut centroids = Vec::new();
    for ((lo, hi), users) in edges {
        match users.len() {
            1 => continue,
            2 => {}
            count => return Err(Error::NonManifoldEdge { v1: lo, v2: hi, count }),
        }
        let (tp, tm) = match (users[0], users[1]) {
            ((a, true), (b, false)) => (a, b),
            ((a, false), (b, true)) => (b, a),
            _ => {
                return Err(Error::InconsistentOrientation {
                    t1: users[0].0,
                    t2: users[1].0,
                    v1: lo,
                    v2: hi,
                })
            }
        };
        let n = functions.len();
        let mut support = |t: usize, sign: f64| {
            let slot = mesh.triangles[t]
                .iter()
                .position(|&v| v != lo && v != hi)
                .expect("triangle has a free vertex");
            triangle_functions[t].push((n, slot, sign));
            TriangleSupport {
                triangle: t,
                free_vertex: mesh.triangles[t][slot],
                sign,
            }
        };
        let plus = support(tp, 1.0);
        let minus = support(tm, -1.0);
        let (a, b) = (mesh.vertices[lo], mesh.vertices[hi]);
        functions.push(RwgFunction {
            edge: (lo, hi),
            length: (b - a).norm(),
            plus,
            minus,
        });
        centroids.push((a + b) / 2.0);
    }
    Ok(RwgBasis {
        functions,
        triangle_functions,
        centroids,
    })
}
