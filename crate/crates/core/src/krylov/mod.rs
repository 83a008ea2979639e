//! Inner linear solvers and the sparse approximate inverse preconditioner.

pub mod sai;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use sai::{SaiPreconditioner, SaiThresholds};

use crate::linalg::{axpy, back_substitute, dotc, givens, norm, DenseMatrix, LinearOperator};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gmres,
    Bicgstab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target `‖b − Ax‖/‖b‖`.
    pub tol: f64,
    /// GMRES restart length.
    pub restart: usize,
    /// Iteration budget per solve.
    pub maxit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kind: SolverKind::Gmres, tol: 1e-3, restart: 60, maxit: 1000 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IterativeSolveReport {
    /// Krylov iterations (one operator application each for GMRES, two for
    /// BiCGSTAB).
    pub iterations: usize,
    /// `‖b − A x‖/‖b‖` recomputed from the returned iterate.
    pub residual: f64,
    pub converged: bool,
    /// Residual estimate after each iteration.
    pub history: Vec<f64>,
}

impl IterativeSolveReport {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut s = String::from("iteration,residual\n");
        for (i, r) in self.history.iter().enumerate() {
            s += &format!("{},{r:e}\n", i + 1);
        }
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn check(a: &dyn LinearOperator, b: &[C64], opts: &SolverOptions) -> Result<()> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} outside (0, 1)", opts.tol)));
    }
    if b.len() != a.dim() {
        return Err(Error::InvalidArgument(format!("rhs length {} for operator of size {}", b.len(), a.dim())));
    }
    Ok(())
}

fn residual(a: &dyn LinearOperator, b: &[C64], x: &[C64]) -> Vec<C64> {
    let ax = a.apply_vec(x);
    b.iter().zip(&ax).map(|(bi, yi)| bi - yi).collect()
}

/// Solves with the solver selected in `opts`.
pub fn solve(
    a: &dyn LinearOperator,
    b: &[C64],
    x0: Option<&[C64]>,
    opts: &SolverOptions,
    precond: Option<&dyn LinearOperator>,
) -> Result<(Vec<C64>, IterativeSolveReport)> {
    match opts.kind {
        SolverKind::Gmres => gmres(a, b, x0, opts, precond),
        SolverKind::Bicgstab => bicgstab(a, b, x0, opts, precond),
    }
}

/// Restarted GMRES with right preconditioning: `A P y = b`, `x = P y`.
///
/// On an exhausted budget the last iterate is returned with
/// `converged = false`.
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[C64],
    x0: Option<&[C64]>,
    opts: &SolverOptions,
    precond: Option<&dyn LinearOperator>,
) -> Result<(Vec<C64>, IterativeSolveReport)> {
    check(a, b, opts)?;
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![zero; n], <[C64]>::to_vec);
    let mut report = IterativeSolveReport::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        report.converged = true;
        return Ok((x, report));
    }
    let m = opts.restart.max(1);
    let apply_p = |v: &[C64]| -> Vec<C64> { precond.map_or_else(|| v.to_vec(), |p| p.apply_vec(v)) };
    let mut r = residual(a, b, &x);
    let mut beta = norm(&r);
    report.residual = beta / bnorm;
    if report.residual <= opts.tol {
        report.converged = true;
        return Ok((x, report));
    }
    while report.iterations < opts.maxit {
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|c| c / beta).collect());
        let mut h = DenseMatrix::zeros(m + 1, m);
        let mut cs: Vec<(f64, C64)> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && report.iterations < opts.maxit {
            let mut w = a.apply_vec(&apply_p(&v[k]));
            // modified Gram-Schmidt with one reorthogonalization pass
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dotc(vi, &w);
                    h[(i, k)] += hij;
                    axpy(-hij, vi, &mut w);
                }
            }
            let hn = norm(&w);
            h[(k + 1, k)] = C64::new(hn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (t0, t1) = (h[(i, k)], h[(i + 1, k)]);
                h[(i, k)] = t0 * c + s * t1;
                h[(i + 1, k)] = -s.conj() * t0 + t1 * c;
            }
            let (c, s, rr) = givens(h[(k, k)], h[(k + 1, k)]);
            h[(k, k)] = rr;
            h[(k + 1, k)] = zero;
            cs.push((c, s));
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            report.iterations += 1;
            k += 1;
            let est = g[k].norm() / bnorm;
            report.history.push(est);
            if est <= opts.tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        let y = back_substitute(&h, &g, k);
        let mut update = vec![zero; n];
        for (yi, vi) in y.iter().zip(&v) {
            axpy(*yi, vi, &mut update);
        }
        let pu = apply_p(&update);
        for (xi, di) in x.iter_mut().zip(&pu) {
            *xi += di;
        }
        r = residual(a, b, &x);
        beta = norm(&r);
        report.residual = beta / bnorm;
        if report.residual <= opts.tol {
            report.converged = true;
            break;
        }
        if beta == 0.0 {
            break;
        }
    }
    Ok((x, report))
}

/// BiCGSTAB with right preconditioning.
pub fn bicgstab(
    a: &dyn LinearOperator,
    b: &[C64],
    x0: Option<&[C64]>,
    opts: &SolverOptions,
    precond: Option<&dyn LinearOperator>,
) -> Result<(Vec<C64>, IterativeSolveReport)> {
    check(a, b, opts)?;
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![zero; n], <[C64]>::to_vec);
    let mut report = IterativeSolveReport::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        report.converged = true;
        return Ok((x, report));
    }
    let apply_p = |v: &[C64]| -> Vec<C64> { precond.map_or_else(|| v.to_vec(), |p| p.apply_vec(v)) };
    let mut r = residual(a, b, &x);
    let rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (one, one, one);
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    report.residual = norm(&r) / bnorm;
    if report.residual <= opts.tol {
        report.converged = true;
        return Ok((x, report));
    }
    while report.iterations < opts.maxit {
        let rho_new = dotc(&rhat, &r);
        if rho_new.norm() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = apply_p(&p);
        v = a.apply_vec(&ph);
        let den = dotc(&rhat, &v);
        if den.norm() == 0.0 {
            break;
        }
        alpha = rho / den;
        let s: Vec<C64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        report.iterations += 1;
        if norm(&s) / bnorm <= opts.tol {
            axpy(alpha, &ph, &mut x);
            report.history.push(norm(&s) / bnorm);
            break;
        }
        let sh = apply_p(&s);
        let t = a.apply_vec(&sh);
        let tt = dotc(&t, &t).re;
        omega = if tt > 0.0 { dotc(&t, &s) / tt } else { zero };
        axpy(alpha, &ph, &mut x);
        axpy(omega, &sh, &mut x);
        r = s.iter().zip(&t).map(|(si, ti)| si - omega * ti).collect();
        let est = norm(&r) / bnorm;
        report.history.push(est);
        if est <= opts.tol || omega.norm() == 0.0 {
            break;
        }
    }
    report.residual = norm(&residual(a, b, &x)) / bnorm;
    report.converged = report.residual <= opts.tol;
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_diff, DenseOperator};
    use rand::{Rng, SeedableRng};

    struct Identity(usize);
    impl LinearOperator for Identity {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            y.copy_from_slice(x);
        }
    }

    fn system(n: usize, seed: u64) -> (DenseMatrix, Vec<C64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut c = |s: f64| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * s;
        let a = DenseMatrix::from_fn(n, n, |i, j| if i == j { C64::new(4.0, 1.0) + c(1.0) } else { c(0.3) });
        let b = (0..n).map(|_| c(1.0)).collect();
        (a, b)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b: Vec<C64> = (0..7).map(|i| C64::new(i as f64, 1.0)).collect();
        let (x, rep) = gmres(&Identity(7), &b, None, &SolverOptions::default(), None).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rel_diff(&x, &b) < 1e-14);
    }

    #[test]
    fn matches_direct_solve() {
        let (a, b) = system(50, 7);
        let exact = a.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let exact: Vec<C64> = exact.iter().copied().collect();
        let op = DenseOperator { matrix: &a };
        for kind in [SolverKind::Gmres, SolverKind::Bicgstab] {
            let opts = SolverOptions { kind, tol: 1e-10, ..Default::default() };
            let (x, rep) = solve(&op, &b, None, &opts, None).unwrap();
            assert!(rep.converged && rep.residual <= 1e-10, "{kind:?} {rep:?}");
            assert!(rel_diff(&x, &exact) < 1e-8, "{kind:?}");
            assert_eq!(rep.history.len(), rep.iterations);
        }
    }

    #[test]
    fn restarts_and_preconditioning() {
        let (a, b) = system(60, 9);
        let op = DenseOperator { matrix: &a };
        let opts = SolverOptions { tol: 1e-8, restart: 5, ..Default::default() };
        let (_, plain) = gmres(&op, &b, None, &opts, None).unwrap();
        assert!(plain.converged);
        // exact inverse as preconditioner converges immediately
        let inv = a.clone().try_inverse().unwrap();
        let p = DenseOperator { matrix: &inv };
        let (x, rep) = gmres(&op, &b, None, &opts, Some(&p)).unwrap();
        assert!(rep.iterations <= 2 && rep.converged);
        assert!(rel_diff(&op.apply_vec(&x), &b) < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_true_residual() {
        let (a, b) = system(40, 11);
        let op = DenseOperator { matrix: &a };
        let opts = SolverOptions { tol: 1e-12, maxit: 3, ..Default::default() };
        let (x, rep) = gmres(&op, &b, None, &opts, None).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        let r = residual(&op, &b, &x);
        assert!((norm(&r) / norm(&b) - rep.residual).abs() < 1e-14);
        assert!(gmres(&op, &b, None, &SolverOptions { tol: 0.0, ..Default::default() }, None).is_err());
    }

    #[test]
    fn telemetry_csv() {
        let (a, b) = system(20, 1);
        let (_, rep) = gmres(&DenseOperator { matrix: &a }, &b, None, &SolverOptions::default(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        rep.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), rep.history.len() + 1);
    }
}
