//! Implicitly restarted Arnoldi with exact shifts for the largest-magnitude
//! Ritz values of a complex operator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::linalg::{dotc, givens, norm};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IraOptions {
    pub nev: usize,
    pub ncv: usize,
    /// Relative Ritz residual `‖Av − θv‖ ≤ tol·|θ|`.
    pub tol: f64,
    pub max_outer: usize,
    /// ChaCha seed of the start vector.
    pub seed: u64,
    /// Rayleigh–Ritz refinement of the converged modes on `(X, R)`
    /// (applied by [`super::ira_eigs`]).
    pub refine: bool,
}

impl Default for IraOptions {
    fn default() -> Self {
        Self { nev: 5, ncv: 20, tol: 1e-8, max_outer: 300, seed: 1, refine: true }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub theta: C64,
    /// Unit 2-norm Ritz vector.
    pub vector: Vec<C64>,
    /// `‖Av − θv‖/|θ|` from the Arnoldi relation.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct IraResult {
    /// The `nev` wanted pairs, `|θ|` descending.
    pub pairs: Vec<RitzPair>,
    pub outer_iterations: usize,
    pub applications: usize,
    pub converged: bool,
}

fn random_unit(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    let s = 1.0 / norm(&v);
    v.iter_mut().for_each(|x| *x *= s);
    v
}

/// Classical Gram–Schmidt of `w` against `basis` with one DGKS correction.
/// Returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); basis.len()];
    let w0 = norm(w);
    for pass in 0..2 {
        let c: Vec<C64> = basis.iter().map(|v| dotc(v, w)).collect();
        for (v, ci) in basis.iter().zip(&c) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * ci;
            }
        }
        for (hi, ci) in h.iter_mut().zip(&c) {
            *hi += ci;
        }
        let cn: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if pass == 0 && norm(w) > std::f64::consts::FRAC_1_SQRT_2 * w0.max(cn) {
            break;
        }
    }
    h
}

/// Eigenpairs of a small complex matrix via its Schur form; eigenvectors
/// have unit 2-norm.
pub(crate) fn small_eig(h: &DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let m = h.nrows();
    let (q, t) = h
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?
        .unpack();
    let scale = t.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut x = DMatrix::<C64>::zeros(m, m);
    let theta: Vec<C64> = (0..m).map(|i| t[(i, i)]).collect();
    for i in 0..m {
        x[(i, i)] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let s: C64 = (j + 1..=i).map(|p| t[(j, p)] * x[(p, i)]).sum();
            let mut d = t[(j, j)] - theta[i];
            if d.norm() < 1e-14 * scale {
                d = C64::new(1e-14 * scale, 0.0);
            }
            x[(j, i)] = -s / d;
        }
    }
    let mut y = q * x;
    for mut c in y.column_iter_mut() {
        let s = c.norm();
        c /= C64::new(s, 0.0);
    }
    Ok((theta, y))
}

/// One implicit QR sweep with shift `sigma` on the leading `m×m` block of an
/// upper Hessenberg `h`; accumulates the rotations into `q`.
fn shifted_qr_step(h: &mut DMatrix<C64>, q: &mut DMatrix<C64>, m: usize, sigma: C64) {
    for i in 0..m - 1 {
        let (a, b) = if i == 0 { (h[(0, 0)] - sigma, h[(1, 0)]) } else { (h[(i, i - 1)], h[(i + 1, i - 1)]) };
        let (c, s, _) = givens(a, b);
        for j in i.saturating_sub(1)..m {
            let (t1, t2) = (h[(i, j)], h[(i + 1, j)]);
            h[(i, j)] = t1 * c + s * t2;
            h[(i + 1, j)] = -s.conj() * t1 + t2 * c;
        }
        for p in 0..(i + 3).min(m) {
            let (t1, t2) = (h[(p, i)], h[(p, i + 1)]);
            h[(p, i)] = t1 * c + s.conj() * t2;
            h[(p, i + 1)] = -s * t1 + t2 * c;
        }
        for p in 0..m {
            let (t1, t2) = (q[(p, i)], q[(p, i + 1)]);
            q[(p, i)] = t1 * c + s.conj() * t2;
            q[(p, i + 1)] = -s * t1 + t2 * c;
        }
        if i > 0 {
            h[(i + 1, i - 1)] = C64::new(0.0, 0.0);
        }
    }
}

/// Largest-magnitude eigenpairs of the map `apply` on `C^n`.
///
/// Each outer iteration extends the Arnoldi factorization to `ncv` vectors,
/// tests the `nev` wanted Ritz values, and restarts with the unwanted Ritz
/// values as exact shifts. Partial results come back with
/// `converged = false` when `max_outer` is exhausted.
pub fn ira<F>(n: usize, opts: &IraOptions, mut apply: F) -> Result<IraResult>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    let (nev, m) = (opts.nev, opts.ncv);
    if !(1 <= nev && nev < m && m <= n) {
        return Err(Error::InvalidArgument(format!("need 1 <= nev ({nev}) < ncv ({m}) <= N ({n})")));
    }
    if m < 2 * nev + 1 {
        log::warn!("ncv = {m} is small for nev = {nev}; convergence may be slow");
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("outer tolerance must be positive".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Vec<C64>> = vec![random_unit(n, &mut rng)];
    let mut h = DMatrix::<C64>::zeros(m + 1, m);
    let mut k = 0;
    let mut applications = 0;
    let mut outer = 0;
    loop {
        outer += 1;
        for j in k..m {
            let mut w = apply(&v[j])?;
            applications += 1;
            let wn = norm(&w);
            let hc = orthogonalize(&v, &mut w);
            for (i, x) in hc.into_iter().enumerate() {
                h[(i, j)] = x;
            }
            let mut beta = norm(&w);
            if beta <= 1e-13 * wn.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue with a fresh orthogonal direction
                w = random_unit(n, &mut rng);
                orthogonalize(&v, &mut w);
                beta = 0.0;
                let s = 1.0 / norm(&w);
                w.iter_mut().for_each(|x| *x *= s);
            } else {
                let s = 1.0 / beta;
                w.iter_mut().for_each(|x| *x *= s);
            }
            h[(j + 1, j)] = C64::new(beta, 0.0);
            v.push(w);
        }
        let beta = h[(m, m - 1)].norm();
        let hm = h.view((0, 0), (m, m)).into_owned();
        let (theta, y) = small_eig(&hm)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(a.cmp(&b)));
        let est = |i: usize| beta * y[(m - 1, i)].norm() / theta[i].norm().max(f64::MIN_POSITIVE);
        let nconv = order[..nev].iter().filter(|&&i| est(i) <= opts.tol).count();
        if nconv >= nev || outer >= opts.max_outer {
            let pairs = order[..nev]
                .iter()
                .map(|&i| {
                    let mut x = vec![C64::new(0.0, 0.0); n];
                    for (p, vp) in v[..m].iter().enumerate() {
                        let c = y[(p, i)];
                        for (xi, vi) in x.iter_mut().zip(vp) {
                            *xi += vi * c;
                        }
                    }
                    let s = 1.0 / norm(&x);
                    x.iter_mut().for_each(|e| *e *= s);
                    RitzPair { theta: theta[i], vector: x, residual: est(i) }
                })
                .collect();
            let converged = nconv >= nev;
            if !converged {
                log::warn!("IRA: {nconv} of {nev} Ritz pairs converged after {outer} outer iterations");
            }
            return Ok(IraResult { pairs, outer_iterations: outer, applications, converged });
        }
        // keep a few extra vectors once some have converged (ARPACK heuristic)
        let kk = (nev + nconv.min((m - nev) / 2)).min(m - 1);
        let mut q = DMatrix::<C64>::identity(m, m);
        let mut hs = hm;
        for &i in &order[kk..] {
            shifted_qr_step(&mut hs, &mut q, m, theta[i]);
        }
        let mut f: Vec<C64> = v[m].iter().map(|x| x * (beta * q[(m - 1, kk - 1)])).collect();
        let mut vn: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        for c in 0..=kk {
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (p, vp) in v[..m].iter().enumerate() {
                let qc = q[(p, c)];
                for (xi, vi) in x.iter_mut().zip(vp) {
                    *xi += vi * qc;
                }
            }
            if c == kk {
                let hk = hs[(kk, kk - 1)];
                for (fi, xi) in f.iter_mut().zip(&x) {
                    *fi += xi * hk;
                }
            } else {
                vn.push(x);
            }
        }
        orthogonalize(&vn, &mut f);
        let mut bk = norm(&f);
        if bk <= 1e-13 {
            f = random_unit(n, &mut rng);
            orthogonalize(&vn, &mut f);
            bk = 0.0;
        }
        let s = 1.0 / norm(&f);
        f.iter_mut().for_each(|x| *x *= s);
        vn.push(f);
        h.fill(C64::new(0.0, 0.0));
        h.view_mut((0, 0), (kk, kk)).copy_from(&hs.view((0, 0), (kk, kk)));
        h[(kk, kk - 1)] = C64::new(bk, 0.0);
        v = vn;
        k = kk;
    }
}
