//! Multilevel fast multipole matvec engine.
//!
//! Far interactions are written with the radiation pattern of each basis
//! about its box center `c`,
//!
//! ```text
//! P_j(k̂) = (Ī − k̂k̂)·∫ f_j(r) e^{−ik k̂·(r−c)} dS,
//! ```
//!
//! stored as θ/φ components on the direction grid. The receiving pattern is
//! `conj(P_i)`, so the far part of the engine-convention integral is
//!
//! ```text
//! E_ij ≈ (ik/4π) Σ_q w_q α(k̂_q) conj(P_i)·P_j
//! ```
//!
//! with `α` the translator of the chosen kernel. Helmholtz gives `E`, the
//! cos kernel `Re E` and the sin kernel `Im E` for real basis functions.

pub mod engine;
pub mod point;
pub mod sphere;

use serde::{Deserialize, Serialize};

pub use engine::{FmmContext, Mlfma, MlfmaOptions, OperatorKind};
pub use point::{point_decomposition_error, PointCase};
pub use sphere::{Interpolator, SphereQuadrature};

use crate::assembly::Assembler;
use crate::mesh::{RwgBasis, SurfaceMesh, Vec3};
use crate::quadrature::TriangleRule;
use crate::special::{legendre_p, spherical_h1n, spherical_jn, spherical_yn};
use crate::{Result, C64};

/// Radial function of the translator series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `e^{ikR}/R`, spherical Hankel `h_l^(1)`.
    Helmholtz,
    /// `cos(kR)/R`, spherical Neumann `y_l`.
    Cos,
    /// `sin(kR)/R`, spherical Bessel `j_l`.
    Sin,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Helmholtz => "helmholtz",
            Kernel::Cos => "cos",
            Kernel::Sin => "sin",
        }
    }

    /// The kernel evaluated at distance `r`.
    pub fn eval(self, k: f64, r: f64) -> C64 {
        match self {
            Kernel::Helmholtz => C64::from_polar(1.0 / r, k * r),
            Kernel::Cos => C64::new((k * r).cos() / r, 0.0),
            Kernel::Sin => C64::new((k * r).sin() / r, 0.0),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "helmholtz" => Ok(Kernel::Helmholtz),
            "cos" => Ok(Kernel::Cos),
            "sin" => Ok(Kernel::Sin),
            _ => Err(crate::Error::InvalidArgument(format!("unknown kernel '{s}'"))),
        }
    }
}

/// Series truncation for boxes of edge `a` (meters) and `d0` digits.
pub fn truncation_number(a: f64, d0: f64, k: f64) -> usize {
    let kd = k * 3f64.sqrt() * a;
    (kd + 1.8 * d0.powf(2.0 / 3.0) * kd.cbrt()).ceil() as usize
}

/// `α(k̂) = Σ_{l≤L} iˡ(2l+1) c_l(k|r|) P_l(k̂·r̂)` sampled on `dirs`.
pub fn translator(kernel: Kernel, l: usize, k: f64, r: &Vec3, dirs: &[Vec3]) -> Result<Vec<C64>> {
    let d = r.norm();
    if d == 0.0 {
        return Err(crate::Error::InvalidArgument("translator at zero offset".into()));
    }
    let x = k * d;
    let c: Vec<C64> = match kernel {
        Kernel::Helmholtz => spherical_h1n(l, x)?,
        Kernel::Cos => spherical_yn(l, x)?.into_iter().map(|y| C64::new(0.0, y)).collect(),
        Kernel::Sin => spherical_jn(l, x).into_iter().map(|j| C64::new(0.0, -j)).collect(),
    };
    let mut il = C64::new(1.0, 0.0);
    let coef: Vec<C64> = (0..=l)
        .map(|n| {
            let v = il * c[n] * (2 * n + 1) as f64;
            il *= C64::new(0.0, 1.0);
            v
        })
        .collect();
    let rhat = r / d;
    Ok(dirs
        .iter()
        .map(|dir| {
            let p = legendre_p(l, dir.dot(&rhat));
            coef.iter().zip(&p).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Radiation patterns of every basis function about the centers `center_of`.
///
/// Row `n` holds `2·nq` values: θ components then φ components.
pub fn compute_signatures(
    mesh: &SurfaceMesh,
    basis: &RwgBasis,
    k: f64,
    quad: &SphereQuadrature,
    center_of: impl Fn(usize) -> Vec3,
) -> Vec<Vec<C64>> {
    let rule = TriangleRule::dunavant7();
    let nq = quad.len();
    (0..basis.len())
        .map(|n| {
            let c = center_of(n);
            let mut cart = vec![[C64::new(0.0, 0.0); 3]; nq];
            for s in basis.functions[n].supports() {
                let tv = mesh.triangles[s.triangle].map(|v| mesh.vertices[v]);
                for (b, w) in rule.points.iter().zip(&rule.weights) {
                    let r = tv[0] * b[0] + tv[1] * b[1] + tv[2] * b[2];
                    let f = basis.eval(mesh, n, s.triangle, &r) * (w * mesh.areas[s.triangle]);
                    let rc = r - c;
                    for (acc, dir) in cart.iter_mut().zip(&quad.dirs) {
                        let e = C64::from_polar(1.0, -k * dir.dot(&rc));
                        for d in 0..3 {
                            acc[d] += e * f[d];
                        }
                    }
                }
            }
            let mut out = vec![C64::new(0.0, 0.0); 2 * nq];
            for q in 0..nq {
                let (th, ph) = (quad.theta_hat[q], quad.phi_hat[q]);
                let v = &cart[q];
                out[q] = v[0] * th.x + v[1] * th.y + v[2] * th.z;
                out[nq + q] = v[0] * ph.x + v[1] * ph.y + v[2] * ph.z;
            }
            out
        })
        .collect()
}

/// Cartesian vector of a stored θ/φ sample.
pub fn signature_vector(sig: &[C64], quad: &SphereQuadrature, q: usize) -> [C64; 3] {
    let nq = quad.len();
    let (th, ph) = (quad.theta_hat[q], quad.phi_hat[q]);
    [0, 1, 2].map(|d| sig[q] * th[d] + sig[nq + q] * ph[d])
}

/// Engine-convention far interaction `(ik/4π) Σ w α conj(P_i)·P_j` of two
/// basis functions in boxes centered at `ci` and `cj`.
pub fn far_pair(assembler: &Assembler, kernel: Kernel, l: usize, i: usize, ci: Vec3, j: usize, cj: Vec3) -> Result<C64> {
    let quad = SphereQuadrature::new(l);
    let k = assembler.k;
    let si = &compute_signatures(assembler.mesh, assembler.basis, k, &quad, |_| ci)[i];
    let sj = &compute_signatures(assembler.mesh, assembler.basis, k, &quad, |_| cj)[j];
    let alpha = translator(kernel, l, k, &(ci - cj), &quad.dirs)?;
    let nq = quad.len();
    let mut acc = C64::new(0.0, 0.0);
    for q in 0..nq {
        let dot = si[q].conj() * sj[q] + si[nq + q].conj() * sj[nq + q];
        acc += dot * alpha[q] * quad.weights[q];
    }
    Ok(acc * C64::new(0.0, k / (4.0 * std::f64::consts::PI)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rwg, fixtures};
    use proptest::prelude::*;

    #[test]
    fn truncation_examples() {
        let k = 2.0 * std::f64::consts::PI;
        assert_eq!(truncation_number(0.5, 3.0, k), 13);
        assert_eq!(truncation_number(1.0, 3.0, k), 20);
    }

    proptest! {
        #[test]
        fn truncation_is_monotone(a in 0.1f64..5.0, d0 in 1.0f64..8.0) {
            let k = 2.0 * std::f64::consts::PI;
            prop_assert!(truncation_number(2.0 * a, d0, k) > truncation_number(a, d0, k));
        }

        #[test]
        fn helmholtz_is_cos_plus_i_sin(x in 0.5f64..3.0, y in -2.0f64..2.0, z in -2.0f64..2.0, l in 2usize..20) {
            let quad = SphereQuadrature::new(6);
            let r = Vec3::new(x, y, z);
            let k = 2.0 * std::f64::consts::PI;
            let h = translator(Kernel::Helmholtz, l, k, &r, &quad.dirs).unwrap();
            let c = translator(Kernel::Cos, l, k, &r, &quad.dirs).unwrap();
            let s = translator(Kernel::Sin, l, k, &r, &quad.dirs).unwrap();
            for q in 0..quad.len() {
                let d = h[q] - (c[q] + C64::new(0.0, 1.0) * s[q]);
                prop_assert!(d.norm() <= 1e-12 * h[q].norm().max(1.0));
            }
        }
    }

    #[test]
    fn zeroth_order_translator_is_h0() {
        let quad = SphereQuadrature::new(3);
        let r = Vec3::new(0.3, -0.4, 1.2);
        let k = 5.0;
        let a = translator(Kernel::Helmholtz, 0, k, &r, &quad.dirs).unwrap();
        let h0 = spherical_h1n(0, k * r.norm()).unwrap()[0];
        assert!(a.iter().all(|v| (v - h0).norm() < 1e-15));
        assert!(translator(Kernel::Sin, 3, k, &Vec3::zeros(), &quad.dirs).is_err());
    }

    #[test]
    fn signatures_are_transverse_and_shift_covariant() {
        let m = fixtures::unit_square().scaled(0.2).unwrap();
        let b = build_rwg(&m).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let quad = SphereQuadrature::new(5);
        let c0 = Vec3::new(0.05, -0.02, 0.01);
        let d = Vec3::new(0.3, 0.1, -0.2);
        let s0 = &compute_signatures(&m, &b, k, &quad, |_| c0)[0];
        let s1 = &compute_signatures(&m, &b, k, &quad, |_| c0 + d)[0];
        for q in 0..quad.len() {
            let v = signature_vector(s0, &quad, q);
            let kd: C64 = (0..3).map(|i| v[i] * quad.dirs[q][i]).sum();
            let mag = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(kd.norm() <= 1e-12 * mag.max(1e-300));
            let ph = C64::from_polar(1.0, k * quad.dirs[q].dot(&d));
            for comp in [q, quad.len() + q] {
                assert!((s1[comp] - s0[comp] * ph).norm() < 1e-12 * s0[comp].norm().max(1e-12));
            }
        }
    }

    #[test]
    fn far_pair_matches_dense_entry() {
        // two small squares 1.5λ apart, each in its own 0.5λ box
        let m = fixtures::unit_square().scaled(0.2).unwrap();
        let mut v = m.vertices.clone();
        v.extend(m.vertices.iter().map(|p| p + Vec3::new(1.5, 0.0, 0.0)));
        let mut t = m.triangles.clone();
        t.extend(m.triangles.iter().map(|tr| tr.map(|i| i + 4)));
        let mesh = SurfaceMesh::new(v, t).unwrap();
        let b = build_rwg(&mesh).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let a = Assembler::new(&mesh, &b, k).unwrap();
        let ci = m.vertices.iter().sum::<Vec3>() / 4.0;
        let cj = ci + Vec3::new(1.5, 0.0, 0.0);
        let l = truncation_number(0.5, 3.0, k);
        for kernel in [Kernel::Helmholtz, Kernel::Cos, Kernel::Sin] {
            let want = a.engine_entry(0, 1);
            let want = match kernel {
                Kernel::Helmholtz => want,
                Kernel::Cos => C64::new(want.re, 0.0),
                Kernel::Sin => C64::new(want.im, 0.0),
            };
            let got = far_pair(&a, kernel, l, 0, ci, 1, cj).unwrap();
            assert!((got - want).norm() < 1e-3 * want.norm(), "{kernel:?}: {got} vs {want}");
        }
    }
}
