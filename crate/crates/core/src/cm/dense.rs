//! Dense reference solution of `X J = λ R J`.
//!
//! `R` is eigendecomposed; its numerically null directions are eliminated
//! with a Schur complement on `X`, and the remaining symmetric-definite
//! problem is reduced to a standard symmetric eigenproblem.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{CmSolution, Mode};
use crate::linalg::{DenseMatrix, RealDenseOperator};
use crate::{Error, Result, C64};

/// Eigenvalues of `R` below this fraction of the largest are treated as null.
pub const R_NULL_THRESHOLD: f64 = 1e-9;
/// Multiple of the most negative eigenvalue of `R` (its quadrature noise
/// floor) below which directions are also treated as null.
pub const R_NOISE_FACTOR: f64 = 10.0;

/// Dense characteristic pairs from `Z = R + iX`, sorted by `|λ|`.
/// `nev = None` returns every finite pair.
pub fn dense_reference(z: &DenseMatrix, nev: Option<usize>, cap: usize) -> Result<CmSolution> {
    let n = z.nrows();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let r = sym(z.map(|c| c.re));
    let x = sym(z.map(|c| c.im));
    let pairs = dense_pencil(&x, &r)?;
    let take = nev.unwrap_or(pairs.len()).min(pairs.len());
    let mut modes: Vec<Mode> = pairs
        .into_iter()
        .take(take)
        .map(|(lambda, j)| {
            let current: Vec<C64> = j.iter().map(|v| C64::new(*v, 0.0)).collect();
            let xj = &x * &j;
            let rj = &r * &j;
            let residual = (&xj - &rj * lambda).norm() / xj.norm().max(rj.norm() * lambda.abs()).max(f64::MIN_POSITIVE);
            Mode {
                lambda,
                ritz_lambda: lambda,
                mu: C64::new(1.0, 0.0) / C64::new(1.0, lambda),
                residual,
                realness: 0.0,
                current,
                normalized: true,
            }
        })
        .collect();
    // the pencil vectors are R-normalized against the truncated R
    let rop = RealDenseOperator { n, data: r.as_slice().to_vec() };
    for m in &mut modes {
        let (j, ok) = super::normalize_mode(&m.current, &rop);
        m.current = j;
        m.normalized = ok;
    }
    Ok(CmSolution {
        freq_hz: 0.0,
        modes,
        nev: take,
        ncv: 0,
        outer_iterations: 0,
        inner_iterations: 0,
        applications: 0,
        converged: true,
    })
}

/// All finite pairs of the real symmetric pencil `(x, r)` with `r` positive
/// semidefinite, sorted by `|λ|`; vectors satisfy `JᵀRJ = 1`.
pub fn dense_pencil(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<Vec<(f64, nalgebra::DVector<f64>)>> {
    let n = r.nrows();
    let er = SymmetricEigen::new(r.clone());
    let rmax = er.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if rmax <= 0.0 {
        return Err(Error::Numerical("R has no positive eigenvalues".into()));
    }
    let rmin = er.eigenvalues.iter().cloned().fold(0.0, f64::min);
    let cut = (R_NULL_THRESHOLD * rmax).max(-R_NOISE_FACTOR * rmin);
    let keep: Vec<usize> = (0..n).filter(|&i| er.eigenvalues[i] > cut).collect();
    let null: Vec<usize> = (0..n).filter(|&i| er.eigenvalues[i] <= cut).collect();
    let u1 = er.eigenvectors.select_columns(&keep);
    let u2 = er.eigenvectors.select_columns(&null);
    let dinv: Vec<f64> = keep.iter().map(|&i| 1.0 / er.eigenvalues[i].sqrt()).collect();
    let xu1 = x * &u1;
    let x11 = u1.transpose() * &xu1;
    let (s, elim) = if null.is_empty() {
        (x11, None)
    } else {
        let x21 = u2.transpose() * &xu1;
        let x22 = u2.transpose() * x * &u2;
        let lu = x22.lu();
        let b = lu
            .solve(&x21)
            .ok_or_else(|| Error::Numerical("reactance singular on the null space of R".into()))?;
        (&x11 - x21.transpose() * &b, Some(b))
    };
    let p = keep.len();
    let mut st = s;
    for i in 0..p {
        for j in 0..p {
            st[(i, j)] *= dinv[i] * dinv[j];
        }
    }
    let st = (&st + st.transpose()) * 0.5;
    let es = SymmetricEigen::new(st);
    let mut out: Vec<(f64, nalgebra::DVector<f64>)> = (0..p)
        .map(|c| {
            let mut a = es.eigenvectors.column(c).into_owned();
            for i in 0..p {
                a[i] *= dinv[i];
            }
            let mut j = &u1 * &a;
            if let Some(b) = &elim {
                j -= &u2 * (b * &a);
            }
            (es.eigenvalues[c], j)
        })
        .collect();
    out.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_pencil() {
        // X = [[1, 0], [0, -2]], R = diag(2, 1): λ = 1/2 and -2
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let p = dense_pencil(&x, &r).unwrap();
        assert!((p[0].0 - 0.5).abs() < 1e-15);
        assert!((p[1].0 + 2.0).abs() < 1e-15);
        let j = &p[0].1;
        assert!(((j.transpose() * &r * j)[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coupled_pencil_with_null_direction() {
        // R = diag(1, 0): one finite pair; X J = λ R J with J = (a, b),
        // second row: x21 a + x22 b = 0
        let x = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = dense_pencil(&x, &r).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].0 - 2.5).abs() < 1e-12);
        let j = &p[0].1;
        let res = &x * j - &r * j * p[0].0;
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn random_pencil_residuals() {
        use rand::{Rng, SeedableRng};
        let n = 12;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let r = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
        let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let x = &b + b.transpose();
        let p = dense_pencil(&x, &r).unwrap();
        assert_eq!(p.len(), n);
        for w in p.windows(2) {
            assert!(w[0].0.abs() <= w[1].0.abs());
        }
        for (l, j) in &p {
            assert!((&x * j - &r * j * *l).norm() < 1e-10 * (1.0 + l.abs()));
        }
        let z = DenseMatrix::from_fn(n, n, |i, j| C64::new(r[(i, j)], x[(i, j)]));
        assert!(matches!(dense_reference(&z, None, 5), Err(Error::CapExceeded { .. })));
        let s = dense_reference(&z, Some(3), 100).unwrap();
        assert_eq!(s.modes.len(), 3);
        assert!(s.modes.iter().all(|m| m.residual < 1e-10));
    }
}
