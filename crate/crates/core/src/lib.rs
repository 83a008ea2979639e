//! Characteristic-mode analysis of perfectly conducting surfaces.
//!
//! The crate discretizes the EFIE with RWG basis functions, builds either a
//! dense impedance matrix or a multilevel fast multipole (MLFMA) operator,
//! and extracts characteristic pairs `X J = λ R J` with an implicitly
//! restarted Arnoldi iteration on `Z⁻¹R` (or `X⁻¹R`). A dense
//! symmetric-definite solver provides the reference path.
//!
//! Module map:
//!
//! - [`mesh`]: triangle meshes, RWG basis, MSH/OFF readers, synthetic fixtures
//! - [`assembly`]: Galerkin impedance entries, dense matrix, near-field block
//! - [`octree`]: multilevel box tree and interaction lists
//! - [`fmm`]: sphere sampling, translators, signatures, the MLFMA matvec
//! - [`krylov`]: GMRES, BiCGSTAB and the sparse approximate inverse
//! - [`cm`]: spectral operators, IRA, dense reference, mode post-processing
//! - [`config`] and [`driver`]: run configuration and the command drivers

pub mod assembly;
pub mod cm;
pub mod config;
pub mod driver;
pub mod error;
pub mod fmm;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod octree;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m), CODATA 2018.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Free-space wave impedance (ohm).
pub const ETA0: f64 = MU0 * C0;

/// Wavenumber `2πf/c₀` for a frequency in hertz.
pub fn wavenumber(freq_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_hz / C0
}

/// Wavelength in meters for a frequency in hertz.
pub fn wavelength(freq_hz: f64) -> f64 {
    C0 / freq_hz
}
