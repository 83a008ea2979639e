//! Closed-form static potentials over a flat triangle.

use crate::mesh::Vec3;

/// `(∫_S 1/R dS', ∫_S (ρ' − ρ)/R dS')` for observation point `r`, where `ρ` is
/// the projection of `r` onto the plane of `S` and `R = |r − r'|`.
///
/// `verts` must be counter-clockwise about `normal`.
pub fn potential_integrals(verts: &[Vec3; 3], normal: &Vec3, r: &Vec3) -> (f64, Vec3) {
    let d = normal.dot(&(r - verts[0]));
    let rho = r - normal * d;
    let ad = d.abs();
    let scale = (verts[1] - verts[0]).norm().max((verts[2] - verts[0]).norm());
    let tiny = 1e-12 * scale;

    let mut i1 = 0.0;
    let mut irho = Vec3::zeros();
    for e in 0..3 {
        let (pm, pp) = (verts[e], verts[(e + 1) % 3]);
        let edge = pp - pm;
        let len = edge.norm();
        let lhat = edge / len;
        let uhat = lhat.cross(normal);
        let lp = (pp - rho).dot(&lhat);
        let lm = (pm - rho).dot(&lhat);
        let t = (pp - rho).dot(&uhat);
        let r0sq = t * t + d * d;
        let rp = ((pp - rho).norm_squared() + d * d).sqrt();
        let rm = ((pm - rho).norm_squared() + d * d).sqrt();
        // ln((R⁺ + l⁺)/(R⁻ + l⁻)) without cancellation when l < 0
        let log_term = if r0sq.sqrt() <= tiny {
            0.0
        } else {
            let plus = if lp >= 0.0 { rp + lp } else { r0sq / (rp - lp) };
            let minus = if lm >= 0.0 { rm + lm } else { r0sq / (rm - lm) };
            (plus / minus).ln()
        };
        if t.abs() > tiny {
            i1 += t * log_term;
            if ad > 0.0 {
                i1 -= ad * ((t * lp / (r0sq + ad * rp)).atan() - (t * lm / (r0sq + ad * rm)).atan());
            }
        }
        irho += uhat * (0.5 * (r0sq * log_term + lp * rp - lm * rm));
    }
    (i1, irho)
}
