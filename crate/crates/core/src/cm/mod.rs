//! Characteristic-mode eigensolver.
//!
//! The pencil `X J = λ R J` is solved either densely ([`dense_reference`]) or
//! through the spectral transformation `Z⁻¹R J = μ J`, `μ = 1/(1 + iλ)`
//! ("sep1"), whose largest-`|μ|` Ritz values are the modes closest to
//! resonance. The alternative `X⁻¹R J = (1/λ) J` ("sep") is kept for
//! comparison.

pub mod dense;
pub mod ira;
pub mod output;

use std::cell::Cell;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use dense::{dense_pencil, dense_reference};
pub use ira::{ira, IraOptions, IraResult, RitzPair};
pub use output::{write_eigen_csv, write_modes_json, write_vtk};

use crate::krylov::{self, IterativeSolveReport, SolverOptions};
use crate::linalg::{dotu, LinearOperator};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    /// `Z⁻¹R`
    #[default]
    Sep1,
    /// `X⁻¹R`
    Sep,
}

/// Counters accumulated over every application of a [`SpectralOperator`].
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct InnerStats {
    pub applications: usize,
    pub iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

/// `u ↦ A⁻¹ R u` with `A = Z` (sep1) or `A = X` (sep), the inverse applied
/// by an iterative solve.
pub struct SpectralOperator<'a> {
    pub mode: SpectralMode,
    pub r: &'a dyn LinearOperator,
    pub a: &'a dyn LinearOperator,
    pub solver: SolverOptions,
    pub precond: Option<&'a dyn LinearOperator>,
    stats: Cell<InnerStats>,
}

impl<'a> SpectralOperator<'a> {
    pub fn new(
        mode: SpectralMode,
        r: &'a dyn LinearOperator,
        a: &'a dyn LinearOperator,
        solver: SolverOptions,
        precond: Option<&'a dyn LinearOperator>,
    ) -> Result<Self> {
        let n = r.dim();
        if a.dim() != n || precond.is_some_and(|p| p.dim() != n) {
            return Err(Error::InvalidArgument("operator dimensions differ".into()));
        }
        if mode == SpectralMode::Sep && precond.is_some() {
            log::warn!("sep mode: the near-field preconditioner targets Z, not X");
        }
        Ok(Self { mode, r, a, solver, precond, stats: Cell::new(InnerStats::default()) })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn stats(&self) -> InnerStats {
        self.stats.get()
    }

    /// One R-matvec followed by one inner solve. Fails when the inner
    /// solver misses its tolerance.
    pub fn apply(&self, u: &[C64]) -> Result<(Vec<C64>, IterativeSolveReport)> {
        if u.iter().all(|x| *x == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidArgument("zero input vector".into()));
        }
        let ru = self.r.apply_vec(u);
        let (x, rep) = krylov::solve(self.a, &ru, None, &self.solver, self.precond)?;
        let mut s = self.stats.get();
        s.applications += 1;
        s.iterations += rep.iterations;
        s.max_iterations = s.max_iterations.max(rep.iterations);
        s.max_residual = s.max_residual.max(rep.residual);
        self.stats.set(s);
        if !rep.converged {
            return Err(Error::InnerNotConverged { iterations: rep.iterations, residual: rep.residual });
        }
        Ok((x, rep))
    }
}

fn complex_pair<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// `(λ, realness)` from a Ritz value of the transformed operator.
pub fn extract_lambda(mu: C64, mode: SpectralMode) -> (f64, f64) {
    let inv = C64::new(1.0, 0.0) / mu;
    match mode {
        SpectralMode::Sep1 => (inv.im, (inv.re - 1.0).abs()),
        SpectralMode::Sep => (inv.re, inv.im.abs()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Mode {
    pub lambda: f64,
    /// λ from the Ritz value before refinement.
    pub ritz_lambda: f64,
    /// Ritz value of the transformed operator.
    #[serde(serialize_with = "complex_pair")]
    pub mu: C64,
    pub residual: f64,
    /// `|Re(1/μ) − 1|` (sep1) or `|Im(1/μ)|` (sep).
    pub realness: f64,
    #[serde(skip)]
    pub current: Vec<C64>,
    /// False when `JᵀRJ` was too small to normalize.
    pub normalized: bool,
}

impl Mode {
    pub fn modal_significance(&self) -> f64 {
        1.0 / (1.0 + self.lambda * self.lambda).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CmSolution {
    pub freq_hz: f64,
    /// Sorted by `|λ|` ascending.
    pub modes: Vec<Mode>,
    pub nev: usize,
    pub ncv: usize,
    pub outer_iterations: usize,
    /// Inner Krylov iterations summed over all operator applications.
    pub inner_iterations: usize,
    /// Operator applications (outer matvecs).
    pub applications: usize,
    pub converged: bool,
}

/// Flips `j` so that its largest-magnitude entry has a positive real part.
pub(crate) fn fix_sign(j: &mut [C64]) {
    let big = j.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if big.re < 0.0 {
        j.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Scales `j` to `JᵀRJ = 1` (unconjugated) and fixes the sign so the
/// largest-magnitude entry has positive real part. For the (essentially
/// real) characteristic currents that entry is then real positive.
/// Returns `false` with `j` untouched when `|JᵀRJ| < 1e-12·‖J‖²`.
pub fn normalize_mode(j: &[C64], r: &dyn LinearOperator) -> (Vec<C64>, bool) {
    let s = dotu(j, &r.apply_vec(j));
    let jn: f64 = j.iter().map(|x| x.norm_sqr()).sum();
    if s.norm() < 1e-12 * jn || !s.norm().is_finite() {
        return (j.to_vec(), false);
    }
    let c = C64::new(1.0, 0.0) / s.sqrt();
    let mut out: Vec<C64> = j.iter().map(|x| x * c).collect();
    fix_sign(&mut out);
    (out, true)
}

/// Index groups of modes whose λ agree within `rel` (relative to the larger
/// magnitude), chained over λ sorted by value.
pub fn group_degenerate(lambdas: &[f64], rel: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..lambdas.len()).collect();
    idx.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if {
                let p = lambdas[*g.last().expect("nonempty")];
                (lambdas[i] - p).abs() <= rel * lambdas[i].abs().max(p.abs())
            } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups
}

/// Gram–Schmidt in the bilinear form `JᵀRJ` within each degenerate group.
fn r_orthonormalize(modes: &mut [Mode], r: &dyn LinearOperator) {
    let lambdas: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
    for g in group_degenerate(&lambdas, 0.01) {
        if g.len() < 2 || g.iter().any(|&i| !modes[i].normalized) {
            continue;
        }
        let mut rdone: Vec<(usize, Vec<C64>)> = Vec::new();
        for &i in &g {
            let mut j = modes[i].current.clone();
            for (p, rp) in &rdone {
                let c = dotu(rp, &j);
                let jp = modes[*p].current.clone();
                for (a, b) in j.iter_mut().zip(&jp) {
                    *a -= b * c;
                }
            }
            let (jn, ok) = normalize_mode(&j, r);
            if !ok {
                continue;
            }
            modes[i].current = jn;
            rdone.push((i, r.apply_vec(&modes[i].current)));
        }
    }
}

/// Columns of the refinement basis whose component outside the earlier
/// columns is below this fraction of the mode norm are dropped.
const RR_KEEP: f64 = 0.1;

/// Rayleigh–Ritz on the real pencil `(X, R)` over the span of the real and
/// imaginary parts of the modes' currents. Each refined mode keeps the
/// Ritz value, residual and realness of the Ritz mode it correlates with
/// most.
fn rayleigh_ritz(modes: Vec<Mode>, op: &SpectralOperator) -> Result<Vec<Mode>> {
    let n = op.dim();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let parts = modes
        .iter()
        .map(|m| m.current.iter().map(|c| c.re).collect::<Vec<f64>>())
        .chain(modes.iter().map(|m| m.current.iter().map(|c| c.im).collect()));
    for (idx, mut v) in parts.enumerate() {
        let scale = modes[idx % modes.len()].current.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv > RR_KEEP * scale {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    let m = basis.len();
    if m < modes.len() {
        return Err(Error::Numerical(format!("refinement basis has rank {m} for {} modes", modes.len())));
    }
    let mut rw = Vec::with_capacity(m);
    let mut xw = Vec::with_capacity(m);
    for w in &basis {
        let wc: Vec<C64> = w.iter().map(|x| C64::new(*x, 0.0)).collect();
        rw.push(op.r.apply_vec(&wc).iter().map(|z| z.re).collect::<Vec<f64>>());
        let aw = op.a.apply_vec(&wc);
        xw.push(match op.mode {
            SpectralMode::Sep1 => aw.iter().map(|z| z.im).collect::<Vec<f64>>(),
            SpectralMode::Sep => aw.iter().map(|z| z.re).collect(),
        });
    }
    let sym = |f: &dyn Fn(usize, usize) -> f64| {
        let a = DMatrix::from_fn(m, m, f);
        (&a + a.transpose()) * 0.5
    };
    let rp = sym(&|i, j| dot(&basis[i], &rw[j]));
    let xp = sym(&|i, j| dot(&basis[i], &xw[j]));
    let pairs = dense_pencil(&xp, &rp)?;
    if pairs.len() < modes.len() {
        return Err(Error::Numerical("refinement lost modes".into()));
    }
    let refined: Vec<(f64, Vec<C64>)> = pairs
        .into_iter()
        .take(modes.len())
        .map(|(lambda, c)| {
            let mut j = vec![C64::new(0.0, 0.0); n];
            for (k, b) in basis.iter().enumerate() {
                j.iter_mut().zip(b).for_each(|(x, y)| x.re += c[k] * y);
            }
            (lambda, normalize_mode(&j, op.r).0)
        })
        .collect();
    let currents: Vec<Vec<C64>> = refined.iter().map(|r| r.1.clone()).collect();
    let ritz: Vec<Vec<C64>> = modes.iter().map(|m| m.current.clone()).collect();
    let t = track_modes(&currents, &ritz, op.r)?;
    Ok(refined
        .into_iter()
        .zip(t.permutation)
        .map(|((lambda, current), p)| {
            let src = &modes[p];
            Mode { lambda, current, normalized: true, ..src.clone() }
        })
        .collect())
}

/// Runs IRA on the spectral operator and converts the Ritz pairs into
/// normalized characteristic modes. Non-convergence of the outer iteration
/// is reported through `converged`; inner failures are errors.
pub fn ira_eigs(op: &SpectralOperator, opts: &IraOptions) -> Result<CmSolution> {
    let res = ira(op.dim(), opts, |u| op.apply(u).map(|(x, _)| x))?;
    let stats = op.stats();
    let mut modes: Vec<Mode> = res
        .pairs
        .into_iter()
        .map(|p| {
            let (lambda, realness) = extract_lambda(p.theta, op.mode);
            let (current, normalized) = normalize_mode(&p.vector, op.r);
            if !normalized {
                log::warn!("mode with λ = {lambda:.4} could not be R-normalized");
            }
            Mode { lambda, ritz_lambda: lambda, mu: p.theta, residual: p.residual, realness, current, normalized }
        })
        .collect();
    modes.sort_by(|a, b| a.lambda.abs().total_cmp(&b.lambda.abs()));
    if opts.refine && modes.iter().all(|m| m.normalized) {
        modes = rayleigh_ritz(modes, op)?;
    }
    r_orthonormalize(&mut modes, op.r);
    Ok(CmSolution {
        freq_hz: 0.0,
        modes,
        nev: opts.nev,
        ncv: opts.ncv,
        outer_iterations: res.outer_iterations,
        inner_iterations: stats.iterations,
        applications: res.applications,
        converged: res.converged,
    })
}

/// `‖|a| − |b|‖₂ / ‖b‖₂` over all unknowns.
pub fn magnitude_discrepancy(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Principal angles (radians, ascending) between the spans of `a` and `b`.
pub fn principal_angles(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<f64> {
    let basis = |v: &[Vec<C64>]| {
        let n = v[0].len();
        let m = DMatrix::from_fn(n, v.len(), |i, j| v[j][i]);
        m.qr().q()
    };
    let (qa, qb) = (basis(a), basis(b));
    let svd = (qa.adjoint() * qb).svd(false, false);
    let mut ang: Vec<f64> = svd.singular_values.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
    ang.sort_by(f64::total_cmp);
    ang
}

#[derive(Clone, Debug, Serialize)]
pub struct Tracking {
    /// `permutation[i]`: index in `next` matched to mode `i` of `prev`.
    pub permutation: Vec<usize>,
    /// `|aᵀRb| / √(|aᵀRa|·|bᵀRb|)` per matched pair, in `[0, 1]`.
    pub correlations: Vec<f64>,
    /// Smallest matched correlation.
    pub confidence: f64,
}

/// Matches every mode of `prev` to a distinct mode of `next` by greedy
/// assignment on the R-cosine `|aᵀRb| / √(|aᵀRa|·|bᵀRb|)` (largest first).
/// `r` is taken at the frequency of `next`, so `prev` need not be
/// normalized against it.
pub fn track_modes(prev: &[Vec<C64>], next: &[Vec<C64>], r: &dyn LinearOperator) -> Result<Tracking> {
    if next.len() < prev.len() {
        return Err(Error::InvalidArgument(format!("cannot track {} modes into {}", prev.len(), next.len())));
    }
    let rn: Vec<Vec<C64>> = next.iter().map(|j| r.apply_vec(j)).collect();
    let norm = |a: &[C64], ra: &[C64]| dotu(a, ra).norm().sqrt().max(f64::MIN_POSITIVE);
    let next_norm: Vec<f64> = next.iter().zip(&rn).map(|(a, ra)| norm(a, ra)).collect();
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in prev.iter().enumerate() {
        let pn = norm(p, &r.apply_vec(p));
        for (j, q) in rn.iter().enumerate() {
            cand.push((dotu(p, q).norm() / (pn * next_norm[j]), i, j));
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut permutation = vec![usize::MAX; prev.len()];
    let mut correlations = vec![0.0; prev.len()];
    let mut used = vec![false; next.len()];
    for (c, i, j) in cand {
        if permutation[i] == usize::MAX && !used[j] {
            permutation[i] = j;
            correlations[i] = c;
            used[j] = true;
        }
    }
    let confidence = correlations.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Tracking { permutation, correlations, confidence: if prev.is_empty() { 1.0 } else { confidence } })
}

#[cfg(test)]
mod tests;
