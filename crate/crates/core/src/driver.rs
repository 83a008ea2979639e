//! Command implementations behind the `charmode` binary: point test,
//! matvec check, single-frequency solve, frequency sweep and mesh stats.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::assembly::Assembler;
use crate::cm::{self, CmSolution, SpectralOperator};
use crate::config::{Backend, RunConfig};
use crate::fmm::{point_decomposition_error, FmmContext, Kernel, MlfmaOptions, OperatorKind, PointCase};
use crate::krylov::SaiPreconditioner;
use crate::linalg::{rel_diff, DenseMatrix, DenseOperator, LinearOperator, RealDenseOperator};
use crate::mesh::{build_rwg, mesh_stats, MeshStats, RwgBasis, SurfaceMesh};
use crate::octree::{ListMode, Octree, TreeStats};
use crate::{Error, Result, C64};

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value).expect("serializable"))
}

/// Peak resident set size in MiB (Linux), if available.
pub fn peak_rss_mib() -> Option<f64> {
    let s = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = s.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

// ---------------------------------------------------------------- point test

#[derive(Clone, Debug, Serialize)]
pub struct PointRow {
    pub a_over_lambda: f64,
    pub kernel: Kernel,
    pub case: PointCase,
    pub relative_error: f64,
}

/// Logarithmically spaced box sizes from `lo` to `hi` inclusive.
pub fn log_range(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(Error::InvalidArgument(format!("bad range {lo}..{hi} with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let r = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (r * i as f64).exp()).collect())
}

pub fn point_test(a_values: &[f64], d0: f64, kernels: &[Kernel], cases: &[PointCase]) -> Result<Vec<PointRow>> {
    if kernels.is_empty() || cases.is_empty() {
        return Err(Error::InvalidArgument("empty kernel or case list".into()));
    }
    let mut rows = Vec::new();
    for &kernel in kernels {
        for &case in cases {
            for &a in a_values {
                let relative_error = point_decomposition_error(kernel, case, a, d0)?;
                rows.push(PointRow { a_over_lambda: a, kernel, case, relative_error });
            }
        }
    }
    Ok(rows)
}

pub fn write_point_csv(rows: &[PointRow], path: &Path) -> Result<()> {
    let mut s = String::from("a_over_lambda,kernel,case,relative_error\n");
    for r in rows {
        s += &format!("{:.6},{},{},{:.6e}\n", r.a_over_lambda, r.kernel.name(), r.case.name(), r.relative_error);
    }
    write_text(path, &s)
}

// -------------------------------------------------------------- matvec check

#[derive(Clone, Debug, Serialize)]
pub struct MatvecRow {
    pub operator: &'static str,
    pub vector: usize,
    pub relative_error: f64,
}

/// Dense-vs-MLFMA relative errors of the Z, R and X matvecs on `vectors`
/// seeded random inputs.
pub fn matvec_check(
    mesh: &SurfaceMesh,
    basis: &RwgBasis,
    freq_hz: f64,
    options: &MlfmaOptions,
    vectors: usize,
    seed: u64,
    cap: usize,
) -> Result<Vec<MatvecRow>> {
    let k = crate::wavenumber(freq_hz);
    let z = Assembler::with_orders(mesh, basis, k, options.quadrature.clone())?.assemble_dense(cap)?;
    let ctx = Arc::new(FmmContext::build(mesh, basis, crate::wavelength(freq_hz), options.clone())?);
    let r = RealDenseOperator::real_part(&z);
    let x = RealDenseOperator::imag_part(&z);
    let zd = DenseOperator { matrix: &z };
    let dense: [(&dyn LinearOperator, OperatorKind); 3] = [(&zd, OperatorKind::Z), (&r, OperatorKind::R), (&x, OperatorKind::X)];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<C64>> = (0..vectors)
        .map(|_| (0..basis.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
        .collect();
    let mut rows = Vec::new();
    for (d, kind) in dense {
        let fast = ctx.operator(kind)?;
        for (i, u) in inputs.iter().enumerate() {
            let relative_error = rel_diff(&fast.apply_vec(u), &d.apply_vec(u));
            rows.push(MatvecRow { operator: kind.name(), vector: i, relative_error });
        }
    }
    Ok(rows)
}

// ------------------------------------------------------------------- solving

/// Counters mirroring a solver-statistics table row.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Telemetry {
    pub freq_hz: f64,
    pub backend: String,
    pub unknowns: usize,
    pub nev: usize,
    pub ncv: usize,
    /// Octree levels (root included); 0 for the dense backend.
    pub nlv: usize,
    /// Inner iterations summed over the run.
    pub nii: usize,
    pub max_inner_per_solve: usize,
    pub outer_iterations: usize,
    pub applications: usize,
    pub near_nnz: usize,
    pub sai_nnz: usize,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub peak_rss_mib: Option<f64>,
    pub converged: bool,
}

pub struct FrequencyRun {
    pub solution: CmSolution,
    pub telemetry: Telemetry,
    /// Resistance operator at this frequency (for tracking and checks).
    pub r: Box<dyn LinearOperator>,
}

/// Solves one frequency with the configured backend.
pub fn solve_frequency(cfg: &RunConfig, mesh: &SurfaceMesh, basis: &RwgBasis, freq_hz: f64) -> Result<FrequencyRun> {
    let n = basis.len();
    let t0 = Instant::now();
    let mut tel = Telemetry { freq_hz, unknowns: n, nev: cfg.eigen.nev, ..Default::default() };
    match cfg.backend {
        Backend::DenseQz => {
            tel.backend = "dense-qz".into();
            let k = crate::wavenumber(freq_hz);
            let z = Assembler::with_orders(mesh, basis, k, cfg.mlfma.quadrature.clone())?.assemble_dense(cfg.dense_cap)?;
            tel.setup_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let mut solution = cm::dense_reference(&z, Some(cfg.eigen.nev), cfg.dense_cap)?;
            solution.freq_hz = freq_hz;
            tel.solve_seconds = t1.elapsed().as_secs_f64();
            tel.converged = true;
            tel.peak_rss_mib = peak_rss_mib();
            Ok(FrequencyRun { solution, telemetry: tel, r: Box::new(RealDenseOperator::real_part(&z)) })
        }
        Backend::MlfmaIra => {
            tel.backend = "mlfma-ira".into();
            tel.ncv = cfg.eigen.ncv;
            let ctx = Arc::new(FmmContext::build(mesh, basis, crate::wavelength(freq_hz), cfg.mlfma.clone())?);
            tel.nlv = ctx.tree.levels.len();
            tel.near_nnz = ctx.near.nnz();
            let r = ctx.operator(OperatorKind::R)?;
            let a = match cfg.spectral {
                cm::SpectralMode::Sep1 => ctx.operator(OperatorKind::Z)?,
                cm::SpectralMode::Sep => ctx.operator(OperatorKind::X)?,
            };
            let sai = if cfg.sai.enabled && cfg.spectral == cm::SpectralMode::Sep1 {
                Some(SaiPreconditioner::build(&ctx.near.matrix, cfg.sai.thresholds()?)?)
            } else {
                None
            };
            tel.sai_nnz = sai.as_ref().map_or(0, |p| p.nnz());
            tel.setup_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let op = SpectralOperator::new(
                cfg.spectral,
                &r,
                &a,
                cfg.solver.clone(),
                sai.as_ref().map(|p| p as &dyn LinearOperator),
            )?;
            let mut solution = cm::ira_eigs(&op, &cfg.eigen)?;
            solution.freq_hz = freq_hz;
            let stats = op.stats();
            tel.solve_seconds = t1.elapsed().as_secs_f64();
            tel.nii = stats.iterations;
            tel.max_inner_per_solve = stats.max_iterations;
            tel.outer_iterations = solution.outer_iterations;
            tel.applications = solution.applications;
            tel.converged = solution.converged;
            tel.peak_rss_mib = peak_rss_mib();
            Ok(FrequencyRun { solution, telemetry: tel, r: Box::new(r) })
        }
    }
}

pub fn load_problem(cfg: &RunConfig) -> Result<(SurfaceMesh, RwgBasis)> {
    let mesh = cfg.mesh.load(&cfg.base_dir)?;
    let basis = build_rwg(&mesh)?;
    Ok((mesh, basis))
}

fn tag(freq_hz: f64) -> String {
    format!("{:.0}MHz", freq_hz / 1e6)
}

/// Single-frequency solve: writes `eigenvalues.csv`, `modes_<f>.json`,
/// `currents_<f>.vtk` and `summary.json` under `cfg.output_dir`. Outer
/// non-convergence still writes every file, then fails.
pub fn run_solve(cfg: &RunConfig, freq_hz: f64) -> Result<FrequencyRun> {
    let (mesh, basis) = load_problem(cfg)?;
    let run = solve_frequency(cfg, &mesh, &basis, freq_hz)?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cm::write_eigen_csv(std::slice::from_ref(&run.solution), out.join("eigenvalues.csv"))?;
    cm::write_modes_json(&run.solution, out.join(format!("modes_{}.json", tag(freq_hz))))?;
    cm::write_vtk(&mesh, &basis, &run.solution, out.join(format!("currents_{}.vtk", tag(freq_hz))))?;
    write_json(
        &out.join("summary.json"),
        &serde_json::json!({ "config": cfg, "telemetry": run.telemetry, "modes": run.solution.modes }),
    )?;
    if !run.solution.converged {
        return Err(Error::Numerical(format!(
            "IRA did not converge in {} outer iterations (partial results written)",
            run.solution.outer_iterations
        )));
    }
    Ok(run)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackPoint {
    pub freq_hz: f64,
    /// Index into that frequency's modes (|λ| order).
    pub mode: usize,
    pub lambda: f64,
    /// R-cosine with the previous point (1 at the first frequency).
    pub correlation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub curves: Vec<Vec<TrackPoint>>,
    pub telemetry: Vec<Telemetry>,
    #[serde(skip)]
    pub solutions: Vec<CmSolution>,
}

impl SweepResult {
    /// Smallest per-step correlation over all curves.
    pub fn min_confidence(&self) -> f64 {
        self.curves.iter().flatten().map(|p| p.correlation).fold(1.0, f64::min)
    }
}

/// Solves every sweep frequency and follows the first `tracked_modes` modes
/// of the first frequency by R-correlation.
pub fn sweep(cfg: &RunConfig, mesh: &SurfaceMesh, basis: &RwgBasis) -> Result<SweepResult> {
    let freqs = cfg.frequency.sweep()?;
    let mut curves: Vec<Vec<TrackPoint>> = vec![Vec::new(); cfg.tracked_modes];
    let mut prev: Vec<Vec<C64>> = Vec::new();
    let mut telemetry = Vec::new();
    let mut solutions = Vec::new();
    for (step, &f) in freqs.iter().enumerate() {
        log::info!("sweep point {}/{}: {:.1} MHz", step + 1, freqs.len(), f / 1e6);
        let run = solve_frequency(cfg, mesh, basis, f)?;
        let modes = &run.solution.modes;
        if modes.len() < cfg.tracked_modes {
            return Err(Error::Numerical(format!("{} modes at {f} Hz, {} tracked", modes.len(), cfg.tracked_modes)));
        }
        if step == 0 {
            for (i, c) in curves.iter_mut().enumerate() {
                c.push(TrackPoint { freq_hz: f, mode: i, lambda: modes[i].lambda, correlation: 1.0 });
            }
            prev = modes[..cfg.tracked_modes].iter().map(|m| m.current.clone()).collect();
        } else {
            let next: Vec<Vec<C64>> = modes.iter().map(|m| m.current.clone()).collect();
            let t = cm::track_modes(&prev, &next, run.r.as_ref())?;
            for (i, c) in curves.iter_mut().enumerate() {
                let j = t.permutation[i];
                c.push(TrackPoint { freq_hz: f, mode: j, lambda: modes[j].lambda, correlation: t.correlations[i] });
                prev[i] = next[j].clone();
            }
        }
        telemetry.push(run.telemetry);
        solutions.push(run.solution);
    }
    Ok(SweepResult { curves, telemetry, solutions })
}

pub fn write_tracks_csv(res: &SweepResult, path: &Path) -> Result<()> {
    let mut s = String::from("frequency_hz,curve,mode,lambda,correlation\n");
    for (c, curve) in res.curves.iter().enumerate() {
        for p in curve {
            s += &format!("{},{},{},{:.10e},{:.6}\n", p.freq_hz, c + 1, p.mode + 1, p.lambda, p.correlation);
        }
    }
    write_text(path, &s)
}

/// Sweep with `eigenvalues.csv`, `tracks.csv` and `summary.json` written
/// under `cfg.output_dir`.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let (mesh, basis) = load_problem(cfg)?;
    let res = sweep(cfg, &mesh, &basis)?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cm::write_eigen_csv(&res.solutions, out.join("eigenvalues.csv"))?;
    write_tracks_csv(&res, &out.join("tracks.csv"))?;
    write_json(
        &out.join("summary.json"),
        &serde_json::json!({ "config": cfg, "min_confidence": res.min_confidence(), "sweep": &res }),
    )?;
    if let Some(t) = res.telemetry.iter().find(|t| !t.converged) {
        return Err(Error::Numerical(format!("IRA did not converge at {} Hz (partial results written)", t.freq_hz)));
    }
    Ok(res)
}

// ------------------------------------------------------------------- scaling

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub unknowns: usize,
    pub setup_seconds: f64,
    /// Fastest of the timed MLFMA `Z` matvecs.
    pub mlfma_seconds: f64,
    /// Dense `N × N` product time, extrapolated from a timed row block.
    pub dense_seconds: f64,
}

/// Matvec timings on a golden-angle sphere of `points` vertices
/// (`3·points − 6` unknowns) whose radius grows as `√N` so the mesh density
/// per wavelength stays fixed (0.75λ at 942 unknowns).
///
/// The dense time multiplies a random `dense_rows × N` complex block and
/// scales by `N / dense_rows`; a full matrix at 16k unknowns would need 4 GB.
pub fn scaling_point(points: usize, reps: usize, dense_rows: usize, seed: u64) -> Result<ScalingRow> {
    if reps == 0 || dense_rows == 0 {
        return Err(Error::InvalidArgument("reps and dense_rows must be positive".into()));
    }
    let n_est = 3 * points.max(4) - 6;
    let mesh = crate::mesh::fixtures::fibonacci_sphere(points, 0.75 * (n_est as f64 / 942.0).sqrt())?;
    let basis = build_rwg(&mesh)?;
    let n = basis.len();
    let t0 = Instant::now();
    let ctx = Arc::new(FmmContext::build(&mesh, &basis, 1.0, MlfmaOptions::default())?);
    let z = ctx.operator(OperatorKind::Z)?;
    let setup_seconds = t0.elapsed().as_secs_f64();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rand_c = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let u: Vec<C64> = (0..n).map(|_| rand_c()).collect();
    let mut y = vec![C64::new(0.0, 0.0); n];
    let mut mlfma_seconds = f64::INFINITY;
    for _ in 0..reps {
        let t = Instant::now();
        z.apply(&u, &mut y);
        mlfma_seconds = mlfma_seconds.min(t.elapsed().as_secs_f64());
    }
    let m = dense_rows.min(n);
    let block = DenseMatrix::from_fn(m, n, |_, _| rand_c());
    let uv = nalgebra::DVector::from_column_slice(&u);
    let mut dense_seconds = f64::INFINITY;
    for _ in 0..reps {
        let t = Instant::now();
        let yb = &block * &uv;
        let dt = t.elapsed().as_secs_f64();
        std::hint::black_box(yb);
        dense_seconds = dense_seconds.min(dt * n as f64 / m as f64);
    }
    Ok(ScalingRow { unknowns: n, setup_seconds, mlfma_seconds, dense_seconds })
}

// ---------------------------------------------------------------- mesh stats

#[derive(Clone, Debug, Serialize)]
pub struct MeshReport {
    pub mesh: MeshStats,
    pub tree: Option<TreeStats>,
}

pub fn mesh_report(mesh: &SurfaceMesh, freq_hz: f64, target_box: f64) -> Result<MeshReport> {
    let basis = build_rwg(mesh)?;
    let stats = mesh_stats(mesh, &basis, freq_hz);
    let tree = Octree::build(mesh, &basis, crate::wavelength(freq_hz), target_box)?;
    let lists = tree.interaction_lists(ListMode::Standard);
    Ok(MeshReport { mesh: stats, tree: Some(tree.stats(&lists)) })
}

/// Dense `Z` for a solved configuration (used by comparisons).
pub fn dense_z(cfg: &RunConfig, mesh: &SurfaceMesh, basis: &RwgBasis, freq_hz: f64) -> Result<DenseMatrix> {
    Assembler::with_orders(mesh, basis, crate::wavenumber(freq_hz), cfg.mlfma.quadrature.clone())?.assemble_dense(cfg.dense_cap)
}
