//! Galerkin EFIE impedance entries for RWG functions.
//!
//! The engine integrand is the mixed-potential form
//! `E_ij = ∫∫ [f_i·f_j − (∇·f_i)(∇'·f_j)/k²] e^{ikR}/R dS dS'`.
//! Stored matrices hold `Z = R + iX` with `R = kη·Im E` (positive
//! semidefinite, the radiated-power form) and `X = kη·Re E`; that is
//! `Z = i·kη·conj(E)`. Any positive rescaling leaves characteristic values
//! unchanged.
//!
//! Triangle pairs that share a vertex use a 16-point outer rule with the
//! static `1/R` part integrated analytically over the source triangle; all
//! other pairs use a 7-point rule on both triangles.

pub mod dump;
pub mod singular;

use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::{RwgBasis, SurfaceMesh, Vec3};
use crate::octree::Octree;
use crate::quadrature::TriangleRule;
use crate::{Error, Result, C64, ETA0};

pub use singular::potential_integrals;

/// Default dense-storage cap on the number of unknowns.
pub const DEFAULT_DENSE_CAP: usize = 5000;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOrders {
    /// Points per triangle for separated pairs.
    pub far: usize,
    /// Points per triangle for touching pairs.
    pub near: usize,
    /// For pairs sharing an edge (or identical), the outer rule is applied
    /// on `near_split²` sub-triangles.
    pub near_split: usize,
    /// Gauss-Legendre order of the Duffy rule used for the smooth remainder
    /// of touching pairs; 0 uses the `near` triangle rule instead.
    pub remainder_duffy: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self { far: 7, near: 16, near_split: 4, remainder_duffy: 0 }
    }
}

/// 3×3 block of `∫∫ [(r − v_p)·(r' − v_q)/(4 A_T A_S) − 1/(k² A_T A_S)] g`
/// for free vertices `p` of `T` and `q` of `S`.
pub type Local = [[C64; 3]; 3];

/// Per-triangle cached geometry and quadrature points.
struct TriGeom {
    verts: [Vec3; 3],
    center: Vec3,
    normal: Vec3,
    area: f64,
    /// Far-rule points relative to `center`, with weights times area.
    far_pts: Vec<(Vec3, f64)>,
    near_pts: Vec<(Vec3, f64)>,
    outer_pts: Vec<(Vec3, f64)>,
}

/// Everything needed to evaluate impedance entries on one mesh at one `k`.
pub struct Assembler<'a> {
    pub mesh: &'a SurfaceMesh,
    pub basis: &'a RwgBasis,
    pub k: f64,
    pub orders: QuadratureOrders,
    tris: Vec<TriGeom>,
    /// Gauss-Legendre nodes and weights on `[0, 1]` for Duffy rules.
    duffy: Vec<(f64, f64)>,
}

impl<'a> Assembler<'a> {
    pub fn new(mesh: &'a SurfaceMesh, basis: &'a RwgBasis, k: f64) -> Result<Self> {
        Self::with_orders(mesh, basis, k, QuadratureOrders::default())
    }

    pub fn with_orders(mesh: &'a SurfaceMesh, basis: &'a RwgBasis, k: f64, orders: QuadratureOrders) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        let far = TriangleRule::with_points(orders.far)
            .ok_or_else(|| Error::InvalidArgument(format!("no {}-point triangle rule", orders.far)))?;
        let near = TriangleRule::with_points(orders.near)
            .ok_or_else(|| Error::InvalidArgument(format!("no {}-point triangle rule", orders.near)))?;
        let outer = near.subdivided(orders.near_split.max(1));
        let tris = (0..mesh.triangles.len())
            .map(|t| {
                let verts = mesh.triangles[t].map(|i| mesh.vertices[i]);
                let center = (verts[0] + verts[1] + verts[2]) / 3.0;
                let area = mesh.areas[t];
                if area <= 0.0 {
                    return Err(Error::DegenerateTriangle { triangle: t, area });
                }
                let place = |rule: &TriangleRule| {
                    rule.points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(b, w)| (verts[0] * b[0] + verts[1] * b[1] + verts[2] * b[2] - center, w * area))
                        .collect()
                };
                Ok(TriGeom {
                    verts,
                    center,
                    normal: mesh.normals[t],
                    area,
                    far_pts: place(&far),
                    near_pts: place(&near),
                    outer_pts: place(&outer),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let duffy = if orders.remainder_duffy > 0 {
            let (x, w) = crate::quadrature::gauss_legendre(orders.remainder_duffy);
            x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            mesh,
            basis,
            k,
            orders,
            tris,
            duffy,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn touching(&self, t: usize, s: usize) -> bool {
        let a = self.mesh.triangles[t];
        let b = self.mesh.triangles[s];
        a.iter().any(|v| b.contains(v))
    }

    /// Local block for `(T, S)`, computed in canonical order so that
    /// `local(T, S) = local(S, T)ᵀ` bit for bit.
    pub fn local(&self, t: usize, s: usize) -> Local {
        if t <= s {
            self.local_canonical(t, s)
        } else {
            transpose(&self.local_canonical(s, t))
        }
    }

    fn local_canonical(&self, t: usize, s: usize) -> Local {
        if self.touching(t, s) {
            let a = self.local_singular(t, s);
            let b = transpose(&self.local_singular(s, t));
            let mut m = [[C64::new(0.0, 0.0); 3]; 3];
            for p in 0..3 {
                for q in 0..3 {
                    m[p][q] = (a[p][q] + b[p][q]) * 0.5;
                }
            }
            m
        } else {
            self.local_regular(t, s)
        }
    }

    fn finish(&self, t: usize, s: usize, g0: C64, gr: [C64; 3], grp: [C64; 3], grr: C64) -> Local {
        let (ta, sa) = (&self.tris[t], &self.tris[s]);
        let inv4 = 1.0 / (4.0 * ta.area * sa.area);
        let scal = g0 / (self.k * self.k * ta.area * sa.area);
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for p in 0..3 {
            let vp = ta.verts[p] - ta.center;
            for q in 0..3 {
                let vq = sa.verts[q] - sa.center;
                let a = grr - (gr[0] * vq.x + gr[1] * vq.y + gr[2] * vq.z)
                    - (grp[0] * vp.x + grp[1] * vp.y + grp[2] * vp.z)
                    + g0 * vp.dot(&vq);
                m[p][q] = a * inv4 - scal;
            }
        }
        m
    }

    fn local_regular(&self, t: usize, s: usize) -> Local {
        let (ta, sa) = (&self.tris[t], &self.tris[s]);
        let off = sa.center - ta.center;
        let k = self.k;
        let z = C64::new(0.0, 0.0);
        let (mut g0, mut gr, mut grp, mut grr) = (z, [z; 3], [z; 3], z);
        for (x, wx) in &ta.far_pts {
            let mut s0 = z;
            let mut s1 = [z; 3];
            for (y, wy) in &sa.far_pts {
                let rr = (off + y - x).norm();
                let (sn, cs) = (k * rr).sin_cos();
                let g = C64::new(cs, sn) * (wy / rr);
                s0 += g;
                s1[0] += g * y.x;
                s1[1] += g * y.y;
                s1[2] += g * y.z;
            }
            g0 += s0 * *wx;
            gr[0] += s0 * (wx * x.x);
            gr[1] += s0 * (wx * x.y);
            gr[2] += s0 * (wx * x.z);
            for c in 0..3 {
                grp[c] += s1[c] * *wx;
            }
            grr += (s1[0] * x.x + s1[1] * x.y + s1[2] * x.z) * *wx;
        }
        self.finish(t, s, g0, gr, grp, grr)
    }

    /// Outer quadrature on `T`; analytic `1/R` over `S` plus the smooth
    /// remainder `(e^{ikR} − 1)/R` by quadrature.
    fn local_singular(&self, t: usize, s: usize) -> Local {
        let (ta, sa) = (&self.tris[t], &self.tris[s]);
        let off = sa.center - ta.center;
        let k = self.k;
        let z = C64::new(0.0, 0.0);
        let (mut g0, mut gr, mut grp, mut grr) = (z, [z; 3], [z; 3], z);
        let shared = self.mesh.triangles[t].iter().filter(|v| self.mesh.triangles[s].contains(v)).count();
        let outer = if shared >= 2 { &ta.outer_pts } else { &ta.near_pts };
        for (x, wx) in outer {
            let r_abs = ta.center + x;
            let (i1, irho) = potential_integrals(&sa.verts, &sa.normal, &r_abs);
            let d = sa.normal.dot(&(r_abs - sa.verts[0]));
            let rho_local = r_abs - sa.normal * d - sa.center;
            // ∫ y/R with y = r' − c_S
            let iy = irho + rho_local * i1;
            let mut s0 = C64::new(i1, 0.0);
            let mut s1 = [C64::new(iy.x, 0.0), C64::new(iy.y, 0.0), C64::new(iy.z, 0.0)];
            let duffy;
            let inner: &[(Vec3, f64)] = if self.duffy.is_empty() {
                &sa.near_pts
            } else {
                duffy = self.duffy_points(sa, &(rho_local + sa.center));
                &duffy
            };
            for (y, wy) in inner {
                let rr = (off + y - x).norm();
                let g = if rr < 1e-12 * ta.area.sqrt() {
                    C64::new(0.0, k)
                } else {
                    let (sn, cs) = (k * rr).sin_cos();
                    C64::new(cs - 1.0, sn) / rr
                } * *wy;
                s0 += g;
                s1[0] += g * y.x;
                s1[1] += g * y.y;
                s1[2] += g * y.z;
            }
            g0 += s0 * *wx;
            gr[0] += s0 * (wx * x.x);
            gr[1] += s0 * (wx * x.y);
            gr[2] += s0 * (wx * x.z);
            for c in 0..3 {
                grp[c] += s1[c] * *wx;
            }
            grr += (s1[0] * x.x + s1[1] * x.y + s1[2] * x.z) * *wx;
        }
        self.finish(t, s, g0, gr, grp, grr)
    }

    /// Duffy points on `S` about `apex` (in the plane of `S`), relative to
    /// the centroid of `S`, with signed weights.
    fn duffy_points(&self, sa: &TriGeom, apex: &Vec3) -> Vec<(Vec3, f64)> {
        let mut out = Vec::with_capacity(3 * self.duffy.len() * self.duffy.len());
        for e in 0..3 {
            let (b, c) = (sa.verts[e], sa.verts[(e + 1) % 3]);
            let signed = 0.5 * (b - apex).cross(&(c - apex)).dot(&sa.normal);
            if signed.abs() <= 1e-14 * sa.area {
                continue;
            }
            for &(u, wu) in &self.duffy {
                for &(v, wv) in &self.duffy {
                    let p = apex + (b - apex) * u + (c - b) * (u * v);
                    out.push((p - sa.center, 2.0 * signed * u * wu * wv));
                }
            }
        }
        out
    }

    /// Triangle pairs contributing to `E_ij` (`i ≤ j`), in canonical
    /// `(min, max)` order, each with the local slots and weight factor.
    fn entry_terms(&self, i: usize, j: usize) -> Vec<((usize, usize), usize, usize, f64)> {
        let (fi, fj) = (&self.basis.functions[i], &self.basis.functions[j]);
        let slot = |tri: usize, free: usize| {
            self.mesh.triangles[tri]
                .iter()
                .position(|&v| v == free)
                .expect("free vertex in triangle")
        };
        let mut terms = Vec::with_capacity(4);
        for a in fi.supports() {
            for b in fj.supports() {
                let (pa, qb) = (slot(a.triangle, a.free_vertex), slot(b.triangle, b.free_vertex));
                let w = a.sign * b.sign * fi.length * fj.length;
                // store with the canonical triangle order, slots following
                if a.triangle <= b.triangle {
                    terms.push(((a.triangle, b.triangle), pa, qb, w));
                } else {
                    terms.push(((b.triangle, a.triangle), qb, pa, w));
                }
            }
        }
        // same visiting order as the triangle-pair sweep in `assemble_pattern`
        terms.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        terms
    }

    /// `E_ij` in the engine convention (kernel `e^{ikR}/R`).
    pub fn engine_entry(&self, i: usize, j: usize) -> C64 {
        let (i, j) = (i.min(j), i.max(j));
        let mut acc = C64::new(0.0, 0.0);
        for ((t, s), p, q, w) in self.entry_terms(i, j) {
            acc += self.local(t, s)[p][q] * w;
        }
        acc
    }

    /// `Z_ij = R_ij + i X_ij`.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.to_z(self.engine_entry(i, j))
    }

    /// Maps an engine value `E` to `Z = i·kη·conj(E)`.
    pub fn to_z(&self, e: C64) -> C64 {
        C64::new(e.im, e.re) * (self.k * ETA0)
    }

    /// Sweeps canonical triangle pairs `(T ≤ S)` from `pairs` (sorted) and
    /// accumulates `E` into canonical entries `(i ≤ j)` accepted by `sink`.
    fn assemble_pattern(&self, pairs: impl Iterator<Item = (usize, usize)>, mut sink: impl FnMut(usize, usize, C64)) {
        let tf = &self.basis.triangle_functions;
        for (t, s) in pairs {
            if tf[t].is_empty() || tf[s].is_empty() {
                continue;
            }
            let m = self.local_canonical(t, s);
            let mut ordered: Vec<(usize, usize, usize, usize, f64)> = Vec::with_capacity(9);
            for &(a, pa, sa) in &tf[t] {
                for &(b, qb, sb) in &tf[s] {
                    if t == s && a > b {
                        continue;
                    }
                    let w = sa * sb * self.basis.functions[a].length * self.basis.functions[b].length;
                    ordered.push((a, b, pa, qb, w));
                }
            }
            // within one triangle pair, terms of an entry arrive ordered by slots
            ordered.sort_by(|x, y| (x.0.min(x.1), x.0.max(x.1), x.2, x.3).cmp(&(y.0.min(y.1), y.0.max(y.1), y.2, y.3)));
            for (a, b, pa, qb, w) in ordered {
                let v = m[pa][qb] * w;
                let (i, j) = (a.min(b), a.max(b));
                sink(i, j, v);
                if a == b && t != s {
                    // f_a spans both triangles: (T, S) and (S, T) contribute equally
                    sink(i, j, v);
                }
            }
        }
    }

    /// Full `N × N` matrix `Z`.
    pub fn assemble_dense(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.len();
        if n > cap {
            return Err(Error::CapExceeded { n, cap });
        }
        let nt = self.mesh.triangles.len();
        let mut e = DenseMatrix::zeros(n, n);
        let pairs = (0..nt).flat_map(|t| (t..nt).map(move |s| (t, s)));
        self.assemble_pattern(pairs, |i, j, v| e[(i, j)] += v);
        for j in 0..n {
            for i in 0..=j {
                let z = self.to_z(e[(i, j)]);
                e[(i, j)] = z;
                e[(j, i)] = z;
            }
        }
        Ok(e)
    }

    /// Sparse `Z` restricted to basis pairs whose finest boxes are neighbours
    /// (all pairs when the tree is a dense fallback).
    pub fn assemble_near(&self, tree: &Octree) -> Result<NearBlock> {
        let n = self.len();
        if tree.basis_box.len() != n {
            return Err(Error::PatternMismatch(format!(
                "octree built over {} functions, basis has {n}",
                tree.basis_box.len()
            )));
        }
        let fin = tree.finest();
        // without far levels every box pair is near
        let all: Vec<usize> = (0..tree.levels[fin].boxes.len()).collect();
        let near_of = |b: usize| -> &[usize] {
            if tree.dense_fallback {
                &all
            } else {
                &tree.levels[fin].boxes[b].near
            }
        };
        let near_box = |a: usize, b: usize| tree.dense_fallback || tree.is_near(fin, tree.basis_box[a], tree.basis_box[b]);

        // pattern: row i holds every j in a neighbouring finest box
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            let bi = tree.basis_box[i];
            for &bj in near_of(bi) {
                row.extend_from_slice(&tree.levels[fin].boxes[bj].members);
            }
            row.sort_unstable();
        }

        // triangle pairs touched by any near entry
        let nt = self.mesh.triangles.len();
        let tf = &self.basis.triangle_functions;
        let mut box_tris: Vec<Vec<usize>> = vec![Vec::new(); tree.levels[fin].boxes.len()];
        for (t, funcs) in tf.iter().enumerate() {
            let mut bs: Vec<usize> = funcs.iter().map(|f| tree.basis_box[f.0]).collect();
            bs.sort_unstable();
            bs.dedup();
            for b in bs {
                box_tris[b].push(t);
            }
        }
        let mut pairs = Vec::new();
        let mut mark = vec![usize::MAX; nt];
        for t in 0..nt {
            let mut bs: Vec<usize> = tf[t].iter().map(|f| tree.basis_box[f.0]).collect();
            bs.sort_unstable();
            bs.dedup();
            let mut cand = Vec::new();
            for b in bs {
                for &nb in near_of(b) {
                    for &s in &box_tris[nb] {
                        if s >= t && mark[s] != t {
                            mark[s] = t;
                            cand.push(s);
                        }
                    }
                }
            }
            cand.sort_unstable();
            pairs.extend(cand.into_iter().map(|s| (t, s)));
        }

        let mut vals: Vec<Vec<C64>> = rows.iter().map(|r| vec![C64::new(0.0, 0.0); r.len()]).collect();
        self.assemble_pattern(pairs.into_iter(), |i, j, v| {
            if near_box(i, j) {
                let p = rows[i].binary_search(&j).expect("near pattern");
                vals[i][p] += v;
            }
        });
        // mirror canonical (i ≤ j) values into the lower triangle
        let mut out: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (p, &j) in rows[i].iter().enumerate() {
                if i <= j {
                    let z = self.to_z(vals[i][p]);
                    out[i].push((j, z));
                    if i != j {
                        out[j].push((i, z));
                    }
                }
            }
        }
        Ok(NearBlock {
            matrix: CsrMatrix::from_rows(n, out),
            basis_box: tree.basis_box.clone(),
        })
    }
}

fn transpose(m: &Local) -> Local {
    let mut t = *m;
    for p in 0..3 {
        for q in 0..3 {
            t[p][q] = m[q][p];
        }
    }
    t
}

/// Near-field part of `Z` over neighbouring finest boxes.
#[derive(Clone, Debug)]
pub struct NearBlock {
    pub matrix: CsrMatrix,
    /// Finest-level box of each basis function.
    pub basis_box: Vec<usize>,
}

impl NearBlock {
    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn density(&self) -> f64 {
        let n = self.matrix.nrows as f64;
        self.nnz() as f64 / (n * n)
    }

    /// `Re Z` restricted to the block pattern.
    pub fn resistance(&self) -> CsrMatrix {
        self.matrix.map_values(|z| C64::new(z.re, 0.0))
    }

    /// `Im Z` restricted to the block pattern.
    pub fn reactance(&self) -> CsrMatrix {
        self.matrix.map_values(|z| C64::new(z.im, 0.0))
    }
}

/// Convenience: `Z` for a whole mesh with default quadrature.
pub fn assemble_dense(mesh: &SurfaceMesh, basis: &RwgBasis, k: f64, cap: usize) -> Result<DenseMatrix> {
    Assembler::new(mesh, basis, k)?.assemble_dense(cap)
}

/// `Re Z` and `Im Z` as real matrices.
pub fn split_rx(z: &DenseMatrix) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    (z.map(|c| c.re), z.map(|c| c.im))
}
