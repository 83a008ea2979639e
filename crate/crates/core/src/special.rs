//! Spherical Bessel functions and Legendre polynomials.

use crate::{Error, Result, C64};

/// `j_0 … j_L` at `x > 0`.
///
/// Ratios `j_l/j_{l-1}` come from a backward continued fraction started well
/// above `max(L, x)`; the sequence is then anchored at `j_0 = sin x / x`.
pub fn spherical_jn(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let j0 = x.sin() / x;
    if x > lmax as f64 + 1.0 {
        // upward recurrence is stable while l < x
        out[0] = j0;
        if lmax >= 1 {
            out[1] = x.sin() / (x * x) - x.cos() / x;
        }
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return out;
    }
    let start = lmax + 20 + (x as usize) + 2 * (lmax as f64).sqrt().ceil() as usize + 20;
    // r_l = j_l / j_{l-1} = 1 / ((2l+1)/x - r_{l+1})
    let mut r = 0.0;
    let mut ratios = vec![0.0; lmax + 1];
    for l in (1..=start).rev() {
        r = 1.0 / ((2 * l + 1) as f64 / x - r);
        if l <= lmax {
            ratios[l] = r;
        }
    }
    out[0] = j0;
    if j0.abs() > 1e-6 * (1.0 / x).min(1.0) {
        for l in 1..=lmax {
            out[l] = out[l - 1] * ratios[l];
        }
    } else {
        // near a zero of j_0 anchor on j_1 instead
        let j1 = x.sin() / (x * x) - x.cos() / x;
        if lmax >= 1 {
            out[1] = j1;
        }
        for l in 2..=lmax {
            out[l] = out[l - 1] * ratios[l];
        }
    }
    out
}

/// `y_0 … y_L` at `x > 0` by upward recurrence; errors on overflow.
pub fn spherical_yn(lmax: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 {
        return Err(Error::Overflow(format!("y_l undefined at x = {x}")));
    }
    let mut out = vec![0.0; lmax + 1];
    out[0] = -x.cos() / x;
    if lmax >= 1 {
        out[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!(
            "spherical Neumann y_{bad}({x:e}) overflows; argument too small for order {lmax}"
        )));
    }
    Ok(out)
}

/// `h_l^(1) = j_l + i y_l` for `l = 0 … L`.
pub fn spherical_h1n(lmax: usize, x: f64) -> Result<Vec<C64>> {
    let j = spherical_jn(lmax, x);
    let y = spherical_yn(lmax, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| C64::new(a, b)).collect())
}

/// `P_0(t) … P_L(t)` by the three-term recurrence.
pub fn legendre_p(lmax: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = t;
    }
    for l in 1..lmax {
        p[l + 1] = ((2 * l + 1) as f64 * t * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    // closed forms for low orders
    fn j2(x: f64) -> f64 {
        (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x)
    }
    fn y2(x: f64) -> f64 {
        (-3.0 / (x * x) + 1.0) * x.cos() / x - 3.0 * x.sin() / (x * x)
    }

    #[test]
    fn low_orders_match_closed_forms() {
        for &x in &[0.05, 0.3, 1.0, 2.5, std::f64::consts::PI, 7.0, 30.0] {
            let j = spherical_jn(4, x);
            let y = spherical_yn(4, x).unwrap();
            assert!((j[0] - x.sin() / x).abs() < 1e-15);
            assert!((j[2] - j2(x)).abs() < 1e-12 * (1.0 + j2(x).abs()), "x={x}");
            assert!((y[2] - y2(x)).abs() < 1e-10 * y2(x).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn small_argument_series() {
        // j_l(x) ≈ x^l / (2l+1)!!
        let x = 1e-3;
        let j = spherical_jn(6, x);
        let mut df = 1.0;
        for (l, jl) in j.iter().enumerate() {
            df *= (2 * l + 1) as f64;
            let approx = x.powi(l as i32) / df;
            assert!((jl - approx).abs() < 1e-5 * approx, "l={l}");
        }
    }

    #[test]
    fn wronskian_holds() {
        // j_{l+1} y_l − j_l y_{l+1} = 1/x²
        for &x in &[0.7, 3.0, 11.0, 25.0] {
            let j = spherical_jn(30, x);
            let y = spherical_yn(30, x).unwrap();
            for l in 0..30 {
                let w = j[l + 1] * y[l] - j[l] * y[l + 1];
                assert!((w * x * x - 1.0).abs() < 1e-9, "x={x} l={l} w={w}");
            }
        }
    }

    #[test]
    fn j_near_zero_of_j0() {
        let x = std::f64::consts::PI * 2.0;
        let j = spherical_jn(3, x);
        assert!((j[2] - j2(x)).abs() < 1e-13);
    }

    #[test]
    fn y_overflow_is_reported() {
        assert!(spherical_yn(400, 1e-3).is_err());
    }

    #[test]
    fn legendre_values() {
        let t = 0.3;
        let p = legendre_p(3, t);
        assert!((p[2] - 0.5 * (3.0 * t * t - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * t * t * t - 3.0 * t)).abs() < 1e-15);
        assert!(legendre_p(20, 1.0).iter().all(|v| (v - 1.0).abs() < 1e-13));
    }
}
