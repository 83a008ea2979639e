//! Plane-wave decomposition error between two points in two boxes.

use serde::{Deserialize, Serialize};

use super::{translator, truncation_number, Kernel, SphereQuadrature};
use crate::mesh::Vec3;
use crate::{Result, C64};

/// Observer placement relative to a source box of edge `a` at the origin
/// corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCase {
    /// Observer box two boxes away along x.
    Case1,
    /// Observer box adjacent along x, observer point almost touching the source.
    Case2,
}

impl PointCase {
    pub fn name(self) -> &'static str {
        match self {
            PointCase::Case1 => "case1",
            PointCase::Case2 => "case2",
        }
    }

    /// `(r_i, c_m, r_j, c_m')` in units of the box edge.
    pub fn geometry(self) -> [Vec3; 4] {
        let rj = Vec3::new(0.9999, 1.0, 0.0);
        let cs = Vec3::new(0.5, 0.5, 0.5);
        match self {
            PointCase::Case1 => [Vec3::new(2.9999, 0.0, 1.0), Vec3::new(2.5, 0.5, 0.5), rj, cs],
            PointCase::Case2 => [Vec3::new(1.0001, 0.0, 0.0), Vec3::new(1.5, 0.5, 0.5), rj, cs],
        }
    }
}

impl std::str::FromStr for PointCase {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" | "1" => Ok(PointCase::Case1),
            "case2" | "2" => Ok(PointCase::Case2),
            _ => Err(crate::Error::InvalidArgument(format!("unknown case '{s}'"))),
        }
    }
}

/// `|G(r_ij) − (ik/4π) Σ w e^{ik k̂·r_im} α e^{ik k̂·r_m'j}| / |G(r_ij)|` at
/// wavelength 1, with the series truncated for boxes of `a_over_lambda`.
pub fn point_decomposition_error(kernel: Kernel, case: PointCase, a_over_lambda: f64, d0: f64) -> Result<f64> {
    if a_over_lambda <= 0.0 {
        return Err(crate::Error::InvalidArgument("box size must be positive".into()));
    }
    let k = 2.0 * std::f64::consts::PI;
    let a = a_over_lambda;
    let [ri, cm, rj, cs] = case.geometry().map(|p| p * a);
    let l = truncation_number(a, d0, k);
    let quad = SphereQuadrature::new(l);
    let alpha = translator(kernel, l, k, &(cm - cs), &quad.dirs)?;
    let (rim, rmj) = (ri - cm, cs - rj);
    let mut sum = C64::new(0.0, 0.0);
    for ((dir, w), al) in quad.dirs.iter().zip(&quad.weights).zip(&alpha) {
        sum += C64::from_polar(*w, k * dir.dot(&(rim + rmj))) * al;
    }
    let rhs = sum * C64::new(0.0, k / (4.0 * std::f64::consts::PI));
    let lhs = kernel.eval(k, (ri - rj).norm());
    Ok((lhs - rhs).norm() / lhs.norm())
}
