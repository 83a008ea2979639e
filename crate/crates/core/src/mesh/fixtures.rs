//! Synthetic meshes: small test shapes, structured plates and Fibonacci
//! spheres (convex hull of a golden-angle point set).

use std::collections::HashSet;

use super::{SurfaceMesh, Vec3};
use crate::Result;

/// Two triangles forming the unit square in the xy-plane.
pub fn unit_square() -> SurfaceMesh {
    let v = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
    ];
    SurfaceMesh::new(v, vec![[0, 1, 2], [0, 2, 3]]).expect("valid fixture")
}

/// Regular tetrahedron with unit edges and outward windings.
pub fn tetrahedron() -> SurfaceMesh {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let v = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    SurfaceMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).expect("valid fixture")
}

/// `lx × ly` plate centered at the origin in the xy-plane, normals `+z`.
///
/// Each of the `nx × ny` cells is split by its `(i, j) → (i+1, j+1)`
/// diagonal, except the cells listed in `crossed`, which get a center vertex
/// and four triangles. Interior edges: `3·nx·ny − nx − ny + 3·crossed`.
pub fn plate(lx: f64, ly: f64, nx: usize, ny: usize, crossed: &[(usize, usize)]) -> Result<SurfaceMesh> {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1) + crossed.len());
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vec3::new(
                -lx / 2.0 + lx * i as f64 / nx as f64,
                -ly / 2.0 + ly * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let crossed: HashSet<(usize, usize)> = crossed.iter().copied().collect();
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if crossed.contains(&(i, j)) {
                let m = v.len();
                v.push((v[a] + v[c]) / 2.0);
                t.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
            } else {
                t.extend([[a, b, c], [a, c, d]]);
            }
        }
    }
    SurfaceMesh::new(v, t)
}

/// Cells crossed in the reference plate: symmetric about both axes.
pub const REFERENCE_PLATE_CROSSED: [(usize, usize); 6] = [(5, 6), (5, 7), (11, 6), (11, 7), (17, 6), (17, 7)];

/// 1.0 m × 0.6 m plate with 947 RWG unknowns.
pub fn reference_plate() -> SurfaceMesh {
    plate(1.0, 0.6, 23, 14, &REFERENCE_PLATE_CROSSED).expect("valid fixture")
}

/// Radius 0.75 m sphere with 316 vertices (942 RWG unknowns).
pub fn reference_sphere() -> SurfaceMesh {
    fibonacci_sphere(316, 0.75).expect("valid fixture")
}

/// Closed sphere mesh: convex hull of `n` golden-angle points.
/// The result has `2n − 4` triangles and `3n − 6` interior edges.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Result<SurfaceMesh> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points: Vec<Vec3> = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect();
    let triangles = convex_hull(&points);
    SurfaceMesh::new(points, triangles)
}

/// Incremental convex hull for points in general position, all of which are
/// extreme (points on a sphere). Windings face outward.
pub fn convex_hull(p: &[Vec3]) -> Vec<[usize; 3]> {
    assert!(p.len() >= 4);
    let scale = p.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-12 * scale * scale * scale;
    let orient = |t: &[usize; 3], q: &Vec3| (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).dot(&(q - p[t[0]]));

    // seed tetrahedron: 0, farthest from 0, farthest from that line, farthest from that plane
    let a = 0;
    let b = (1..p.len())
        .max_by(|&i, &j| (p[i] - p[a]).norm().total_cmp(&(p[j] - p[a]).norm()))
        .unwrap();
    let dir = (p[b] - p[a]).normalize();
    let line_dist = |i: usize| {
        let d = p[i] - p[a];
        (d - dir * d.dot(&dir)).norm()
    };
    let c = (0..p.len()).filter(|&i| i != a && i != b).max_by(|&i, &j| line_dist(i).total_cmp(&line_dist(j))).unwrap();
    let d = (0..p.len())
        .filter(|&i| i != a && i != b && i != c)
        .max_by(|&i, &j| orient(&[a, b, c], &p[i]).abs().total_cmp(&orient(&[a, b, c], &p[j]).abs()))
        .unwrap();
    let mut faces: Vec<[usize; 3]> = if orient(&[a, b, c], &p[d]) < 0.0 {
        vec![[a, b, c], [a, d, b], [b, d, c], [c, d, a]]
    } else {
        vec![[a, c, b], [a, b, d], [b, c, d], [c, a, d]]
    };

    for q in 0..p.len() {
        if q == a || q == b || q == c || q == d {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| orient(f, &p[q]) > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut directed = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                directed.insert((f[e], f[(e + 1) % 3]));
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 2);
        let mut horizon = Vec::new();
        for (f, vis) in faces.into_iter().zip(visible) {
            if vis {
                for e in 0..3 {
                    let (u, w) = (f[e], f[(e + 1) % 3]);
                    if !directed.contains(&(w, u)) {
                        horizon.push([u, w, q]);
                    }
                }
            } else {
                next.push(f);
            }
        }
        next.extend(horizon);
        faces = next;
    }
    faces.sort();
    faces
}
