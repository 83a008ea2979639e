//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance [-- <ids>...]` runs all criteria
//! or only the listed ones. Failing criteria are reported but the process
//! exits 0 unless `CHARMODE_ACCEPTANCE_STRICT=1`, so that `cargo test` stays
//! usable while known failures are tracked.

use std::sync::Arc;
use std::time::Instant;

use charmode::cm::{magnitude_discrepancy, CmSolution};
use charmode::config::{Backend, RunConfig};
use charmode::driver::{self, load_problem, solve_frequency, FrequencyRun};
use charmode::fmm::{translator, truncation_number, FmmContext, Kernel, MlfmaOptions, OperatorKind, PointCase};
use charmode::fmm::SphereQuadrature;
use charmode::krylov::{gmres, SaiPreconditioner, SaiThresholds, SolverOptions};
use charmode::linalg::{dotu, LinearOperator};
use charmode::mesh::{build_rwg, fixtures};
use charmode::octree::{ListMode, Octree};
use charmode::{wavelength, wavenumber, Result, C64};
use rand::{Rng, SeedableRng};

// pinned tolerances
const DECOMPOSITION_TOL: f64 = 1e-12;
const DECOMPOSITION_SECONDS: f64 = 1.0;
const POINT_TOL: f64 = 1e-3;
const POINT_COS_CASE2_MIN: f64 = 0.1;
const POINT_SECONDS: f64 = 10.0;
const MATVEC_TOL: f64 = 1e-3;
const MATVEC_SECONDS: f64 = 60.0;
const TRIPLE_BAND: (f64, f64) = (-0.21, -0.19);
const QUINTET_BAND: (f64, f64) = (0.30, 0.32);
const GROUP_SPREAD: f64 = 0.01;
const SPHERE_EIG_DISCREPANCY: f64 = 0.01;
const PLATE_TIGHT: f64 = 0.01;
const PLATE_LOOSE: f64 = 0.05;
const REALNESS_TOL: f64 = 1e-2;
const ORTHOGONALITY_TOL: f64 = 1e-2;
const SAI_RATIO: f64 = 0.5;
const SAI_SECONDS: f64 = 60.0;
const SCALING_FACTOR: f64 = 1.5;
const DENSE_RATIO_MIN: f64 = 100.0;
const TRACK_CONFIDENCE: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Solves shared between criteria, computed on first use.
#[derive(Default)]
struct Shared {
    plate: Option<PlateRuns>,
    sphere: Option<(FrequencyRun, FrequencyRun)>,
}

struct PlateRuns {
    dense: FrequencyRun,
    tight: FrequencyRun,
    loose: FrequencyRun,
}

const PLATE: &str = r#"
backend = "mlfma-ira"
[mesh]
fixture = "reference_plate"
[frequency]
hz = 300e6
[eigen]
nev = 5
ncv = 20
[solver]
tol = 1e-3
[sai]
preset = "plate"
"#;

const SPHERE: &str = r#"
backend = "mlfma-ira"
[mesh]
fixture = "reference_sphere"
[frequency]
hz = 299792458.0
[eigen]
nev = 10
ncv = 120
[solver]
tol = 1e-3
[sai]
preset = "plate"
"#;

const SWEEP: &str = r#"
backend = "mlfma-ira"
tracked_modes = 4
[mesh]
fixture = "reference_plate"
[frequency]
start_hz = 220e6
stop_hz = 380e6
step_hz = 20e6
[eigen]
nev = 5
ncv = 20
[solver]
tol = 1e-3
[sai]
preset = "plate"
"#;

impl Shared {
    fn plate(&mut self) -> Result<&PlateRuns> {
        if self.plate.is_none() {
            let mut cfg = RunConfig::from_toml(PLATE, ".")?;
            let (mesh, basis) = load_problem(&cfg)?;
            let f = cfg.frequency.single()?;
            let tight = solve_frequency(&cfg, &mesh, &basis, f)?;
            cfg.solver.tol = 1e-2;
            let loose = solve_frequency(&cfg, &mesh, &basis, f)?;
            cfg.backend = Backend::DenseQz;
            let dense = solve_frequency(&cfg, &mesh, &basis, f)?;
            self.plate = Some(PlateRuns { dense, tight, loose });
        }
        Ok(self.plate.as_ref().expect("set above"))
    }

    fn sphere(&mut self) -> Result<&(FrequencyRun, FrequencyRun)> {
        if self.sphere.is_none() {
            let mut cfg = RunConfig::from_toml(SPHERE, ".")?;
            let (mesh, basis) = load_problem(&cfg)?;
            let f = cfg.frequency.single()?;
            let fast = solve_frequency(&cfg, &mesh, &basis, f)?;
            cfg.backend = Backend::DenseQz;
            let dense = solve_frequency(&cfg, &mesh, &basis, f)?;
            self.sphere = Some((fast, dense));
        }
        Ok(self.sphere.as_ref().expect("set above"))
    }
}

fn c1_decomposition(_: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let mesh = fixtures::reference_plate();
    let basis = build_rwg(&mesh)?;
    let lambda = wavelength(300e6);
    let k = wavenumber(300e6);
    let tree = Octree::build(&mesh, &basis, lambda, 0.25)?;
    let lists = tree.interaction_lists(ListMode::Standard);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for l in 0..tree.levels.len() {
        if !lists.is_active(l) {
            continue;
        }
        let size = tree.box_size(l);
        let big_l = truncation_number(size, 3.0, k);
        let quad = SphereQuadrature::new(big_l);
        for off in lists.offsets(&tree, l) {
            let r = nalgebra::Vector3::new(off[0] as f64, off[1] as f64, off[2] as f64) * size;
            let h = translator(Kernel::Helmholtz, big_l, k, &r, &quad.dirs)?;
            let c = translator(Kernel::Cos, big_l, k, &r, &quad.dirs)?;
            let s = translator(Kernel::Sin, big_l, k, &r, &quad.dirs)?;
            let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for q in 0..h.len() {
                let d = (h[q] - (c[q] + C64::i() * s[q])).norm() / scale;
                worst = worst.max(d);
            }
            checked += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(outcome(
        checked > 0 && worst <= DECOMPOSITION_TOL && secs < DECOMPOSITION_SECONDS,
        format!("{checked} level offsets, max |αh − (αc + iαs)|/max|αh| = {worst:.1e} (≤ {DECOMPOSITION_TOL:e}), {secs:.2} s"),
    ))
}

fn c2_point_test(_: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let a = driver::log_range(0.1, 4.0, 40)?;
    let rows = driver::point_test(&a, 3.0, &[Kernel::Cos, Kernel::Sin], &[PointCase::Case1, PointCase::Case2])?;
    let secs = t0.elapsed().as_secs_f64();
    let errs = |k: Kernel, c: PointCase, keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.kernel == k && r.case == c && keep(r.a_over_lambda))
            .map(|r| r.relative_error)
            .collect()
    };
    let all = |_: f64| true;
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let min = |v: Vec<f64>| v.into_iter().fold(f64::INFINITY, f64::min);
    let sin1 = max(errs(Kernel::Sin, PointCase::Case1, &all));
    let sin2 = max(errs(Kernel::Sin, PointCase::Case2, &all));
    let cos1_hi = max(errs(Kernel::Cos, PointCase::Case1, &|a| a >= 0.5));
    let cos1_lo = min(errs(Kernel::Cos, PointCase::Case1, &|a| a < 0.5));
    let cos2 = min(errs(Kernel::Cos, PointCase::Case2, &all));
    let clauses = [
        ("sin case1", sin1 < POINT_TOL),
        ("sin case2", sin2 < POINT_TOL),
        ("cos case1 a≥0.5λ", cos1_hi < POINT_TOL),
        ("cos case1 a<0.5λ degraded", cos1_lo > POINT_TOL),
        ("cos case2 violation", cos2 >= POINT_COS_CASE2_MIN),
        ("runtime", secs < POINT_SECONDS),
    ];
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Ok(outcome(
        failed.is_empty(),
        format!(
            "max sin {sin1:.1e}/{sin2:.1e}, cos case1 max(a≥0.5λ) {cos1_hi:.1e}, min(a<0.5λ) {cos1_lo:.1e}, cos case2 min {cos2:.2}, {secs:.1} s{}",
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    ))
}

fn c3_matvec(_: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let mesh = fixtures::reference_plate();
    let basis = build_rwg(&mesh)?;
    let rows = driver::matvec_check(&mesh, &basis, 300e6, &MlfmaOptions::default(), 5, 1, 4000)?;
    let secs = t0.elapsed().as_secs_f64();
    let worst = |op: &str| rows.iter().filter(|r| r.operator == op).map(|r| r.relative_error).fold(0.0, f64::max);
    let (z, r, x) = (worst("Z"), worst("R"), worst("X"));
    Ok(outcome(
        z < MATVEC_TOL && r < MATVEC_TOL && x < MATVEC_TOL && secs < MATVEC_SECONDS,
        format!("N = {}, worst of 5 vectors: Z {z:.1e}, R {r:.1e}, X {x:.1e} (< {MATVEC_TOL:e}), {secs:.1} s", basis.len()),
    ))
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean.abs()
}

fn c4_sphere(shared: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let (fast, dense) = shared.sphere()?;
    let lf: Vec<f64> = fast.solution.modes.iter().map(|m| m.lambda).collect();
    let ld: Vec<f64> = dense.solution.modes.iter().map(|m| m.lambda).collect();
    if lf.len() < 8 || ld.len() < 8 {
        return Ok(outcome(false, format!("only {} fast / {} dense modes", lf.len(), ld.len())));
    }
    let in_band = |v: &[f64], b: (f64, f64)| v.iter().all(|x| *x >= b.0 && *x <= b.1);
    let (triple, quintet) = (&lf[..3], &lf[3..8]);
    let disc = lf.iter().zip(&ld).take(8).map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max);
    let clauses = [
        ("triple band", in_band(triple, TRIPLE_BAND)),
        ("quintet band", in_band(quintet, QUINTET_BAND)),
        ("triple spread", spread(triple) <= GROUP_SPREAD),
        ("quintet spread", spread(quintet) <= GROUP_SPREAD),
        ("fast vs dense", disc < SPHERE_EIG_DISCREPANCY),
        ("converged", fast.solution.converged),
    ];
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>().join(" ");
    Ok(outcome(
        failed.is_empty(),
        format!(
            "N = {}, fast [{}] dense [{}], spreads {:.2}%/{:.2}%, max |Δλ|/|λ| {:.2}%, nii {}, {:.0} s{}",
            fast.telemetry.unknowns,
            fmt(&lf[..8]),
            fmt(&ld[..8]),
            100.0 * spread(triple),
            100.0 * spread(quintet),
            100.0 * disc,
            fast.telemetry.nii,
            t0.elapsed().as_secs_f64(),
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    ))
}

fn discrepancies(fast: &CmSolution, dense: &CmSolution) -> Vec<f64> {
    fast.modes.iter().zip(&dense.modes).take(4).map(|(a, b)| magnitude_discrepancy(&a.current, &b.current)).collect()
}

fn c5_plate_modes(shared: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let p = shared.plate()?;
    let tight = discrepancies(&p.tight.solution, &p.dense.solution);
    let loose = discrepancies(&p.loose.solution, &p.dense.solution);
    let ok = tight.len() == 4
        && loose.len() == 4
        && tight.iter().all(|d| *d < PLATE_TIGHT)
        && loose.iter().all(|d| *d <= PLATE_LOOSE);
    let pct = |v: &[f64]| v.iter().map(|d| format!("{:.2}%", 100.0 * d)).collect::<Vec<_>>().join(" ");
    Ok(outcome(
        ok,
        format!(
            "J1..J4 discrepancy at inner tol 1e-3: {} (< 1%); at 1e-2: {} (≤ 5%); {:.0} s",
            pct(&tight),
            pct(&loose),
            t0.elapsed().as_secs_f64()
        ),
    ))
}

/// Worst realness and worst off-diagonal `|JₘᵀRJₙ|` of a solution.
fn realness_orthogonality(run: &FrequencyRun) -> (f64, f64) {
    let modes = &run.solution.modes;
    let realness = modes.iter().map(|m| m.realness).fold(0.0, f64::max);
    let rj: Vec<Vec<C64>> = modes.iter().map(|m| run.r.apply_vec(&m.current)).collect();
    let mut off = 0.0f64;
    for (i, a) in modes.iter().enumerate() {
        for r in &rj[i + 1..] {
            off = off.max(dotu(&a.current, r).norm());
        }
    }
    (realness, off)
}

fn c6_realness(shared: &mut Shared) -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut ok = true;
    {
        let p = shared.plate()?;
        for (name, run) in [("plate 1e-3", &p.tight), ("plate 1e-2", &p.loose)] {
            let (re, off) = realness_orthogonality(run);
            ok &= run.solution.converged && re <= REALNESS_TOL && off <= ORTHOGONALITY_TOL;
            lines.push(format!("{name}: realness {re:.1e}, |JᵀRJ| {off:.1e}"));
        }
    }
    let (fast, _) = shared.sphere()?;
    let (re, off) = realness_orthogonality(fast);
    ok &= fast.solution.converged && re <= REALNESS_TOL && off <= ORTHOGONALITY_TOL;
    lines.push(format!("sphere: realness {re:.1e}, |JᵀRJ| {off:.1e}"));
    Ok(outcome(ok, format!("{} (≤ {REALNESS_TOL:e})", lines.join("; "))))
}

fn c7_sai(_: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let mesh = fixtures::reference_plate();
    let basis = build_rwg(&mesh)?;
    let ctx = Arc::new(FmmContext::build(&mesh, &basis, wavelength(300e6), MlfmaOptions::default())?);
    let z = ctx.operator(OperatorKind::Z)?;
    let r = ctx.operator(OperatorKind::R)?;
    let sai = SaiPreconditioner::build(&ctx.near.matrix, SaiThresholds::PLATE)?;
    // right-hand side of the form the eigen-solver produces: R times a random vector
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let u: Vec<C64> = (0..basis.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let b = r.apply_vec(&u);
    let opts = SolverOptions { tol: 1e-3, maxit: 5000, ..Default::default() };
    let (_, plain) = gmres(&z, &b, None, &opts, None)?;
    let (_, pre) = gmres(&z, &b, None, &opts, Some(&sai))?;
    let secs = t0.elapsed().as_secs_f64();
    let ratio = pre.iterations as f64 / plain.iterations as f64;
    Ok(outcome(
        plain.converged && pre.converged && ratio <= SAI_RATIO && secs < SAI_SECONDS,
        format!(
            "GMRES(60) to 1e-3: {} iterations plain, {} with SAI(0.01, 0.014, 0.18), ratio {ratio:.3} (≤ {SAI_RATIO}), {secs:.1} s",
            plain.iterations, pre.iterations
        ),
    ))
}

fn c8_scaling(_: &mut Shared) -> Result<Outcome> {
    let rows: Vec<driver::ScalingRow> =
        [336, 1336, 5336].iter().map(|&p| driver::scaling_point(p, 3, 256, 1)).collect::<Result<_>>()?;
    let (a, c) = (&rows[0], &rows[2]);
    let nlogn = |n: usize| n as f64 * (n as f64).ln();
    let bound = SCALING_FACTOR * nlogn(c.unknowns) / nlogn(a.unknowns);
    let fast = c.mlfma_seconds / a.mlfma_seconds;
    let dense = c.dense_seconds / a.dense_seconds;
    let times = rows
        .iter()
        .map(|r| format!("N={} {:.4}s/{:.4}s", r.unknowns, r.mlfma_seconds, r.dense_seconds))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(outcome(
        fast <= bound && dense >= DENSE_RATIO_MIN,
        format!("mlfma/dense: {times}; mlfma ratio {fast:.1} (≤ {bound:.1}), dense ratio {dense:.0} (≥ {DENSE_RATIO_MIN})"),
    ))
}

fn c9_sweep(_: &mut Shared) -> Result<Outcome> {
    let t0 = Instant::now();
    let cfg = RunConfig::from_toml(SWEEP, ".")?;
    let (mesh, basis) = load_problem(&cfg)?;
    let res = driver::sweep(&cfg, &mesh, &basis)?;
    let steps = res.curves.iter().map(Vec::len).min().unwrap_or(0);
    let converged = res.telemetry.iter().all(|t| t.converged);
    let conf = res.min_confidence();
    Ok(outcome(
        res.curves.len() == 4 && steps == 9 && converged && conf >= TRACK_CONFIDENCE,
        format!(
            "{} curves × {steps} frequencies, all converged: {converged}, min correlation {conf:.3} (≥ {TRACK_CONFIDENCE}), {:.0} s",
            res.curves.len(),
            t0.elapsed().as_secs_f64()
        ),
    ))
}

type Criterion = (u32, &'static str, fn(&mut Shared) -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "translator decomposition", c1_decomposition),
        (2, "point test", c2_point_test),
        (3, "matvec oracle", c3_matvec),
        (4, "sphere degenerate modes", c4_sphere),
        (5, "plate mode agreement", c5_plate_modes),
        (6, "realness and orthogonality", c6_realness),
        (7, "SAI effectiveness", c7_sai),
        (8, "matvec scaling", c8_scaling),
        (9, "frequency sweep", c9_sweep),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var("CHARMODE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut shared = Shared::default();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let o = run(&mut shared).unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failed += 1;
        }
        println!("{} {id}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} failing");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
