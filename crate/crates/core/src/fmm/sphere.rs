//! Direction grids on the unit sphere and local interpolation between them.

use crate::mesh::Vec3;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64};

/// `(L+1)` Gauss-Legendre nodes in θ times `(2L+2)` uniform nodes in φ.
///
/// Direction `q = iθ·nφ + iφ`. The grid is antipodally symmetric: the
/// direction of `(nθ−1−iθ, iφ + nφ/2)` is exactly `−k̂_q`.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub l: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dirs: Vec<Vec3>,
    pub theta_hat: Vec<Vec3>,
    pub phi_hat: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(l: usize) -> Self {
        let nt = l + 1;
        let np = 2 * l + 2;
        let (x, wx) = gauss_legendre(nt);
        // nodes ascending in θ means descending in cos θ
        let cos_t: Vec<f64> = (0..nt).map(|i| x[nt - 1 - i]).collect();
        let w_t: Vec<f64> = (0..nt).map(|i| wx[nt - 1 - i]).collect();
        let mut theta = vec![0.0; nt];
        for i in 0..nt.div_ceil(2) {
            theta[i] = cos_t[i].acos();
            theta[nt - 1 - i] = std::f64::consts::PI - theta[i];
        }
        let half = np / 2;
        let dphi = 2.0 * std::f64::consts::PI / np as f64;
        let mut cs = vec![(0.0, 0.0); np];
        for j in 0..half {
            let (s, c) = (j as f64 * dphi).sin_cos();
            cs[j] = (c, s);
            cs[j + half] = (-c, -s);
        }
        let phi: Vec<f64> = (0..np).map(|j| j as f64 * dphi).collect();
        let mut dirs = Vec::with_capacity(nt * np);
        let mut theta_hat = Vec::with_capacity(nt * np);
        let mut phi_hat = Vec::with_capacity(nt * np);
        let mut weights = Vec::with_capacity(nt * np);
        for i in 0..nt {
            let ct = cos_t[i];
            let st = (1.0 - ct * ct).sqrt();
            for &(cp, sp) in &cs {
                dirs.push(Vec3::new(st * cp, st * sp, ct));
                theta_hat.push(Vec3::new(ct * cp, ct * sp, -st));
                phi_hat.push(Vec3::new(-sp, cp, 0.0));
                weights.push(w_t[i] * dphi);
            }
        }
        Self { l, theta, phi, dirs, theta_hat, phi_hat, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    /// Index of the direction `−k̂_q`.
    pub fn antipode(&self, q: usize) -> usize {
        let (nt, np) = (self.n_theta(), self.n_phi());
        let (i, j) = (q / np, q % np);
        (nt - 1 - i) * np + (j + np / 2) % np
    }
}

/// Interpolation points per direction used between levels.
pub const DEFAULT_STENCIL: usize = 6;

/// Lagrange weights of nodes `xs` at `x`.
fn lagrange(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let mut w = 1.0;
            for (j, &xj) in xs.iter().enumerate() {
                if j != i {
                    w *= (x - xj) / (xs[i] - xj);
                }
            }
            w
        })
        .collect()
}

/// Local Lagrange interpolation from one grid to another, and its adjoint
/// under the quadrature weights (anterpolation).
///
/// The stencil is a tensor product, applied as a φ pass on the source θ rows
/// followed by a θ pass. θ nodes beyond a pole are reflected to `φ + π`;
/// with even φ counts on both grids that column is `(j + n_φ/2) mod n_φ` of
/// the φ-pass output.
#[derive(Clone, Debug)]
pub struct Interpolator {
    pub order: usize,
    from_shape: (usize, usize),
    to_shape: (usize, usize),
    /// `order` taps per target θ: source θ row, weight, pole reflection.
    theta_taps: Vec<(u32, f64, bool)>,
    /// `order` taps per target φ: source φ column, weight.
    phi_taps: Vec<(u32, f64)>,
    from_weights: Vec<f64>,
    to_weights: Vec<f64>,
}

impl Interpolator {
    pub fn new(from: &SphereQuadrature, to: &SphereQuadrature, order: usize) -> Result<Self> {
        let (nt, np) = (from.n_theta(), from.n_phi());
        if order == 0 || order > nt || order > np {
            return Err(Error::StencilTooLarge { stencil: order, grid: nt.min(np) });
        }
        let pi = std::f64::consts::PI;
        // extended θ node `e`: reflected over a pole outside 0..nt
        let ext = |e: i64| -> (usize, f64, bool) {
            let n = nt as i64;
            if e < 0 {
                let i = (-e - 1) as usize;
                (i, -from.theta[i], true)
            } else if e >= n {
                let i = (2 * n - 1 - e) as usize;
                (i, 2.0 * pi - from.theta[i], true)
            } else {
                (e as usize, from.theta[e as usize], false)
            }
        };
        let start = |i: i64, frac_upper: bool| -> i64 {
            // `i` is the node at or below the target
            if order % 2 == 0 || frac_upper {
                i + 1 - order as i64 / 2
            } else {
                i - order as i64 / 2
            }
        };
        let mut theta_taps = Vec::with_capacity(to.n_theta() * order);
        for &tt in &to.theta {
            let below = from.theta.partition_point(|&t| t <= tt) as i64 - 1;
            let upper = {
                let lo = ext(below).1;
                let hi = ext(below + 1).1;
                tt - lo > hi - tt
            };
            let s = start(below, upper);
            let nodes: Vec<(usize, f64, bool)> = (s..s + order as i64).map(ext).collect();
            let wt = lagrange(&nodes.iter().map(|n| n.1).collect::<Vec<_>>(), tt);
            for (&(it, _, refl), &a) in nodes.iter().zip(&wt) {
                theta_taps.push((it as u32, a, refl));
            }
        }
        let mut phi_taps = Vec::with_capacity(to.n_phi() * order);
        for jt in 0..to.n_phi() {
            let num = jt * np;
            let base = (num / to.n_phi()) as i64;
            let frac = (num % to.n_phi()) as f64 / to.n_phi() as f64;
            let sp = start(base, frac > 0.5);
            let offs: Vec<i64> = (sp..sp + order as i64).collect();
            let wp = lagrange(&offs.iter().map(|&o| (o - base) as f64).collect::<Vec<_>>(), frac);
            for (&o, &b) in offs.iter().zip(&wp) {
                phi_taps.push((o.rem_euclid(np as i64) as u32, b));
            }
        }
        Ok(Self {
            order,
            from_shape: (nt, np),
            to_shape: (to.n_theta(), to.n_phi()),
            theta_taps,
            phi_taps,
            from_weights: from.weights.clone(),
            to_weights: to.weights.clone(),
        })
    }

    pub fn n_from(&self) -> usize {
        self.from_shape.0 * self.from_shape.1
    }

    pub fn n_to(&self) -> usize {
        self.to_shape.0 * self.to_shape.1
    }

    /// Interpolates one component. With `vector` set, pole reflections flip
    /// the sign (θ/φ components of a tangential field).
    pub fn interp(&self, x: &[C64], y: &mut [C64], vector: bool) {
        let (nt, np) = self.from_shape;
        let (mt, mp) = self.to_shape;
        let k = self.order;
        let zero = C64::new(0.0, 0.0);
        // φ pass: g[it][jt]
        let mut g = vec![zero; nt * mp];
        for it in 0..nt {
            let row = &x[it * np..(it + 1) * np];
            for (jt, taps) in self.phi_taps.chunks(k).enumerate() {
                let mut acc = zero;
                for &(p, b) in taps {
                    acc += row[p as usize] * b;
                }
                g[it * mp + jt] = acc;
            }
        }
        // θ pass
        for (tt, taps) in self.theta_taps.chunks(k).enumerate() {
            let out = &mut y[tt * mp..(tt + 1) * mp];
            out.iter_mut().for_each(|v| *v = zero);
            for &(it, a, refl) in taps {
                let src = &g[it as usize * mp..(it as usize + 1) * mp];
                if refl {
                    let a = if vector { -a } else { a };
                    let h = mp / 2;
                    for (o, s) in out[..h].iter_mut().zip(&src[h..]) {
                        *o += s * a;
                    }
                    for (o, s) in out[h..].iter_mut().zip(&src[..h]) {
                        *o += s * a;
                    }
                } else {
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += s * a;
                    }
                }
            }
        }
        debug_assert_eq!(mt * mp, y.len());
    }

    /// Adds the weighted adjoint of [`Self::interp`] applied to `y` into `x`:
    /// `x += W_from⁻¹ Iᵀ W_to y`.
    pub fn anterp_add(&self, y: &[C64], x: &mut [C64], vector: bool) {
        let (nt, np) = self.from_shape;
        let mp = self.to_shape.1;
        let k = self.order;
        let zero = C64::new(0.0, 0.0);
        let mut g = vec![zero; nt * mp];
        for (tt, taps) in self.theta_taps.chunks(k).enumerate() {
            let w = &self.to_weights[tt * mp..(tt + 1) * mp];
            let src = &y[tt * mp..(tt + 1) * mp];
            for &(it, a, refl) in taps {
                let dst = &mut g[it as usize * mp..(it as usize + 1) * mp];
                if refl {
                    let a = if vector { -a } else { a };
                    let h = mp / 2;
                    for j in 0..mp {
                        dst[(j + h) % mp] += src[j] * (w[j] * a);
                    }
                } else {
                    for j in 0..mp {
                        dst[j] += src[j] * (w[j] * a);
                    }
                }
            }
        }
        for it in 0..nt {
            let row = &g[it * mp..(it + 1) * mp];
            let out = &mut x[it * np..(it + 1) * np];
            let mut acc = vec![zero; np];
            for (jt, taps) in self.phi_taps.chunks(k).enumerate() {
                for &(p, b) in taps {
                    acc[p as usize] += row[jt] * b;
                }
            }
            let w = &self.from_weights[it * np..(it + 1) * np];
            for ((o, a), wq) in out.iter_mut().zip(&acc).zip(w) {
                *o += a / *wq;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn weights_sum_to_four_pi_and_integrate_harmonics() {
        for l in [0, 3, 8, 13] {
            let q = SphereQuadrature::new(l);
            assert_eq!(q.len(), (l + 1) * (2 * l + 2));
            let s: f64 = q.weights.iter().sum();
            assert!((s - 4.0 * std::f64::consts::PI).abs() < 1e-12);
            // ∫ z² dΩ = 4π/3, exact for l ≥ 1
            if l >= 1 {
                let z2: f64 = q.dirs.iter().zip(&q.weights).map(|(d, w)| d.z * d.z * w).sum();
                assert!((z2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antipodes_are_exact() {
        let q = SphereQuadrature::new(7);
        for i in 0..q.len() {
            let a = q.antipode(i);
            assert_eq!(q.dirs[a], -q.dirs[i]);
            assert_eq!(q.theta_hat[a], q.theta_hat[i]);
            assert_eq!(q.phi_hat[a], -q.phi_hat[i]);
        }
    }

    fn field(q: &SphereQuadrature, f: impl Fn(&Vec3) -> C64) -> Vec<C64> {
        q.dirs.iter().map(f).collect()
    }

    #[test]
    fn constants_are_reproduced() {
        let (a, b) = (SphereQuadrature::new(6), SphereQuadrature::new(11));
        let it = Interpolator::new(&a, &b, 4).unwrap();
        let x = vec![C64::new(2.0, -1.0); a.len()];
        let mut y = vec![C64::new(0.0, 0.0); b.len()];
        it.interp(&x, &mut y, false);
        assert!(y.iter().all(|v| (v - C64::new(2.0, -1.0)).norm() < 1e-12));
    }

    #[test]
    fn vector_components_cross_the_poles() {
        // a constant Cartesian field has smooth θ/φ components only with the
        // reflection sign
        let (a, b) = (SphereQuadrature::new(10), SphereQuadrature::new(15));
        let it = Interpolator::new(&a, &b, 6).unwrap();
        let e = Vec3::new(0.3, -0.7, 0.2);
        let th: Vec<C64> = a.theta_hat.iter().map(|t| C64::new(t.dot(&e), 0.0)).collect();
        let mut y = vec![C64::new(0.0, 0.0); b.len()];
        it.interp(&th, &mut y, true);
        let err = y.iter().zip(&b.theta_hat).map(|(v, t)| (v.re - t.dot(&e)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn anterpolation_is_the_weighted_adjoint() {
        let (a, b) = (SphereQuadrature::new(5), SphereQuadrature::new(9));
        let it = Interpolator::new(&a, &b, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut rnd = |n| (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect::<Vec<_>>();
        let x = rnd(a.len());
        let y = rnd(b.len());
        for vector in [false, true] {
            let mut ix = vec![C64::new(0.0, 0.0); b.len()];
            it.interp(&x, &mut ix, vector);
            let mut ay = vec![C64::new(0.0, 0.0); a.len()];
            it.anterp_add(&y, &mut ay, vector);
            let lhs: C64 = ix.iter().zip(&y).zip(&b.weights).map(|((u, v), w)| u.conj() * v * w).sum();
            let rhs: C64 = x.iter().zip(&ay).zip(&a.weights).map(|((u, v), w)| u.conj() * v * w).sum();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        }
    }

    #[test]
    fn band_limited_field_interpolates_accurately() {
        // plane-wave pattern of a point at the corner of a 0.25λ box: the
        // radiation band of a finest-level signature
        let k = 2.0 * std::f64::consts::PI;
        let (a, b) = (SphereQuadrature::new(8), SphereQuadrature::new(13));
        let it = Interpolator::new(&a, &b, DEFAULT_STENCIL).unwrap();
        let p = Vec3::new(0.125, 0.125, 0.125);
        let f = |d: &Vec3| C64::from_polar(1.0, -k * d.dot(&p));
        let mut y = vec![C64::new(0.0, 0.0); b.len()];
        it.interp(&field(&a, f), &mut y, false);
        let err = y.iter().zip(&b.dirs).map(|(v, d)| (v - f(d)).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
        let s = (1.0 - x * x).sqrt();
        let mut pmm = 1.0;
        for i in 0..m {
            pmm *= (2 * i + 1) as f64 * s;
        }
        if l == m {
            return pmm;
        }
        let (mut p0, mut p1) = (pmm, x * (2 * m + 1) as f64 * pmm);
        for ll in m + 2..=l {
            let p2 = ((2 * ll - 1) as f64 * x * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    /// Max relative error of `P_l^m(cos θ) e^{imφ}` over `m ≤ l`.
    fn harmonic_error(a: &SphereQuadrature, b: &SphereQuadrature, order: usize, l: usize) -> f64 {
        let it = Interpolator::new(a, b, order).unwrap();
        let mut worst = 0.0f64;
        for m in 0..=l {
            let f = |d: &Vec3| C64::from_polar(assoc_legendre(l, m, d.z), m as f64 * d.y.atan2(d.x));
            let mut y = vec![C64::new(0.0, 0.0); b.len()];
            it.interp(&field(a, f), &mut y, false);
            let scale = b.dirs.iter().map(|d| f(d).norm()).fold(0.0, f64::max);
            let e = y.iter().zip(&b.dirs).map(|(v, d)| (v - f(d)).norm()).fold(0.0, f64::max);
            worst = worst.max(e / scale);
        }
        worst
    }

    #[test]
    fn low_degree_harmonics_interpolate_accurately() {
        // finest-to-parent grids of a 0.25λ tree; local Lagrange reaches 1e-4
        // only for the lowest degrees, see the plane-wave test for the
        // band that signatures occupy
        let (a, b) = (SphereQuadrature::new(8), SphereQuadrature::new(13));
        assert!(harmonic_error(&a, &b, DEFAULT_STENCIL, 1) < 1e-4);
        let e: Vec<f64> = (1..=4).map(|l| harmonic_error(&a, &b, DEFAULT_STENCIL, l)).collect();
        assert!(e.windows(2).all(|w| w[1] > w[0]), "{e:?}");
        // higher order converges
        assert!(harmonic_error(&a, &b, 8, 2) < harmonic_error(&a, &b, 4, 2) / 10.0);
    }

    #[test]
    fn oversized_stencil_is_rejected() {
        let (a, b) = (SphereQuadrature::new(1), SphereQuadrature::new(4));
        assert!(matches!(Interpolator::new(&a, &b, 4), Err(Error::StencilTooLarge { .. })));
    }
}
