//! Run configuration (TOML).
//!
//! ```toml
//! backend = "mlfma-ira"
//! output_dir = "out/plate"
//!
//! [mesh]
//! path = "../data/plate.off"
//!
//! [frequency]
//! hz = 300e6
//!
//! [eigen]
//! nev = 5
//! ncv = 20
//!
//! [solver]
//! tol = 1e-3
//!
//! [sai]
//! preset = "plate"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cm::{IraOptions, SpectralMode};
use crate::fmm::MlfmaOptions;
use crate::krylov::{SaiThresholds, SolverOptions};
use crate::mesh::{fixtures, load_mesh, MeshFormat, SurfaceMesh};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "dense-qz")]
    DenseQz,
    #[serde(rename = "mlfma-ira")]
    MlfmaIra,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-qz" | "dense" => Ok(Self::DenseQz),
            "mlfma-ira" | "mlfma" => Ok(Self::MlfmaIra),
            _ => Err(Error::Config(format!("unknown backend {s:?} (dense-qz, mlfma-ira)"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    /// Mesh file, relative to the config file.
    pub path: Option<PathBuf>,
    /// Inferred from the extension when absent.
    pub format: Option<MeshFormat>,
    /// Built-in mesh: `reference_plate`, `reference_sphere` or
    /// `fibonacci_sphere:<points>:<radius>`.
    pub fixture: Option<String>,
}

impl MeshSource {
    pub fn load(&self, base: &Path) -> Result<SurfaceMesh> {
        match (&self.path, &self.fixture) {
            (Some(p), None) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let format = match self.format {
                    Some(f) => f,
                    None => MeshFormat::from_path(&path)
                        .ok_or_else(|| Error::Config(format!("cannot infer mesh format of {}", path.display())))?,
                };
                load_mesh(path, format)
            }
            (None, Some(name)) => fixture(name),
            _ => Err(Error::Config("mesh needs exactly one of `path` or `fixture`".into())),
        }
    }
}

pub fn fixture(name: &str) -> Result<SurfaceMesh> {
    let parts: Vec<&str> = name.split(':').collect();
    match parts.as_slice() {
        ["reference_plate"] => Ok(fixtures::reference_plate()),
        ["reference_sphere"] => Ok(fixtures::reference_sphere()),
        ["fibonacci_sphere", n, r] => {
            let n = n.parse().map_err(|_| Error::Config(format!("bad point count in {name:?}")))?;
            let r = r.parse().map_err(|_| Error::Config(format!("bad radius in {name:?}")))?;
            fixtures::fibonacci_sphere(n, r)
        }
        _ => Err(Error::Config(format!("unknown fixture {name:?}"))),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub hz: Option<f64>,
    pub start_hz: Option<f64>,
    pub stop_hz: Option<f64>,
    pub step_hz: Option<f64>,
}

impl FrequencySpec {
    /// The single frequency, or the first sweep point.
    pub fn single(&self) -> Result<f64> {
        match (self.hz, self.start_hz) {
            (Some(f), _) | (None, Some(f)) => Ok(f),
            _ => Err(Error::Config("no frequency given".into())),
        }
    }

    /// Sweep points `start, start + step, …` up to `stop` inclusive.
    pub fn sweep(&self) -> Result<Vec<f64>> {
        match (self.start_hz, self.stop_hz, self.step_hz) {
            (Some(a), Some(b), Some(s)) => {
                if !(s > 0.0 && b >= a && a > 0.0) {
                    return Err(Error::Config(format!("bad sweep {a}..{b} step {s}")));
                }
                let count = ((b - a) / s + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| a + s * i as f64).collect())
            }
            (None, None, None) => Ok(vec![self.single()?]),
            _ => Err(Error::Config("sweep needs start_hz, stop_hz and step_hz".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaiConfig {
    pub enabled: bool,
    /// `plate`, `uav` or `dreamliner`.
    pub preset: Option<String>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
}

impl Default for SaiConfig {
    fn default() -> Self {
        Self { enabled: true, preset: None, eps1: None, eps2: None, eps3: None }
    }
}

impl SaiConfig {
    /// Preset (default `plate`) with any explicit thresholds overriding it.
    pub fn thresholds(&self) -> Result<SaiThresholds> {
        let name = self.preset.as_deref().unwrap_or("plate");
        let mut t = SaiThresholds::preset(name).ok_or_else(|| Error::Config(format!("unknown SAI preset {name:?}")))?;
        if let Some(v) = self.eps1 {
            t.eps1 = v;
        }
        if let Some(v) = self.eps2 {
            t.eps2 = v;
        }
        if let Some(v) = self.eps3 {
            t.eps3 = v;
        }
        for v in [t.eps1, t.eps2, t.eps3] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("SAI threshold {v} outside (0, 1)")));
            }
        }
        Ok(t)
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_cap() -> usize {
    4000
}

fn default_tracked() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: Option<String>,
    /// Free text, e.g. why a preset cannot run as shipped.
    pub note: Option<String>,
    pub backend: Backend,
    #[serde(default)]
    pub spectral: SpectralMode,
    pub mesh: MeshSource,
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub eigen: IraOptions,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub sai: SaiConfig,
    #[serde(default)]
    pub mlfma: MlfmaOptions,
    /// Largest N for which a dense matrix may be formed.
    #[serde(default = "default_cap")]
    pub dense_cap: usize,
    /// Modes followed across a sweep (taken from the first frequency).
    #[serde(default = "default_tracked")]
    pub tracked_modes: usize,
    /// Relative to the working directory.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Directory that relative mesh paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.base_dir = base_dir.into();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.frequency.sweep()?;
        let e = &self.eigen;
        if e.nev == 0 || e.ncv <= e.nev {
            return bad(format!("need 1 <= nev < ncv (nev = {}, ncv = {})", e.nev, e.ncv));
        }
        if !(e.tol > 0.0 && e.tol < 1.0) || e.max_outer == 0 {
            return bad("eigen.tol must be in (0, 1) and max_outer > 0".into());
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) || s.restart == 0 || s.maxit == 0 {
            return bad("solver.tol must be in (0, 1); restart and maxit positive".into());
        }
        let m = &self.mlfma;
        if !(m.d0 >= 1.0 && m.d0 <= 15.0) {
            return bad(format!("mlfma.d0 = {} outside [1, 15]", m.d0));
        }
        if !(m.target_box > 0.0 && m.target_box <= 2.0) {
            return bad(format!("mlfma.target_box = {} outside (0, 2] wavelengths", m.target_box));
        }
        if m.stencil < 2 {
            return bad("mlfma.stencil must be at least 2".into());
        }
        if self.tracked_modes == 0 || self.tracked_modes > e.nev {
            return bad(format!("tracked_modes = {} must be in 1..=nev", self.tracked_modes));
        }
        if self.sai.enabled {
            self.sai.thresholds()?;
        }
        Ok(())
    }
}
