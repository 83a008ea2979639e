//! Sparse approximate inverse of the near-field block.
//!
//! Pattern selection for column `j` of `P`:
//!
//! 1. `ε₁`: entries of `Z_near` with `|Z_ij| < ε₁·max|Z_near|` are dropped
//!    from the pattern source.
//! 2. `ε₂`: of the remaining entries of column `j`, those with
//!    `|Z_ij| < ε₂·max_i |Z_ij|` are pruned.
//! 3. `ε₃`: the largest `⌈ε₃·nnz(Z_near[:, j])⌉` survivors are kept; the
//!    diagonal is always kept.
//!
//! Each column then minimizes `‖e_j − Z_near p_j‖₂` over the chosen pattern,
//! using every row of `Z_near` that the pattern columns touch.

use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares, CsrMatrix, DenseMatrix, LinearOperator};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaiThresholds {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl SaiThresholds {
    pub const PLATE: Self = Self { eps1: 0.01, eps2: 0.014, eps3: 0.18 };
    pub const UAV: Self = Self { eps1: 0.01, eps2: 0.012, eps3: 0.07 };
    pub const DREAMLINER: Self = Self { eps1: 0.008, eps2: 0.01, eps3: 0.07 };

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "plate" => Some(Self::PLATE),
            "uav" => Some(Self::UAV),
            "dreamliner" => Some(Self::DREAMLINER),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("SAI {name} = {v} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SaiPreconditioner {
    pub matrix: CsrMatrix,
    pub thresholds: SaiThresholds,
    /// Columns that fell back to `1/Z_jj`.
    pub jacobi_columns: usize,
}

impl SaiPreconditioner {
    pub fn build(near: &CsrMatrix, thresholds: SaiThresholds) -> Result<Self> {
        thresholds.validate()?;
        let n = near.nrows;
        if near.ncols != n {
            return Err(Error::InvalidArgument("SAI needs a square near block".into()));
        }
        let cols = near.transpose();
        let gmax = near.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut out: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
        let mut jacobi = 0;
        let mut row_pos = vec![usize::MAX; n];
        for j in 0..n {
            let (ci, cv) = cols.row(j);
            let diag = cols.get(j, j).unwrap_or(C64::new(0.0, 0.0));
            let pattern = column_pattern(j, ci, cv, gmax, &thresholds);
            // rows touched by the pattern columns
            let mut rows: Vec<usize> = Vec::new();
            for &c in &pattern {
                for &r in cols.row(c).0 {
                    if row_pos[r] == usize::MAX {
                        row_pos[r] = 0;
                        rows.push(r);
                    }
                }
            }
            rows.sort_unstable();
            for (p, &r) in rows.iter().enumerate() {
                row_pos[r] = p;
            }
            let mut a = DenseMatrix::zeros(rows.len(), pattern.len());
            for (c, &col) in pattern.iter().enumerate() {
                let (ri, rv) = cols.row(col);
                for (r, v) in ri.iter().zip(rv) {
                    a[(row_pos[*r], c)] = *v;
                }
            }
            let mut e = vec![C64::new(0.0, 0.0); rows.len()];
            let solved = if row_pos[j] != usize::MAX && rows.binary_search(&j).is_ok() {
                e[row_pos[j]] = C64::new(1.0, 0.0);
                least_squares(&a, &e)
            } else {
                None
            };
            for &r in &rows {
                row_pos[r] = usize::MAX;
            }
            match solved {
                Some(p) => out.push(pattern.into_iter().zip(p).collect()),
                None => {
                    if diag.norm() == 0.0 {
                        return Err(Error::Numerical(format!("zero diagonal in near block column {j}")));
                    }
                    jacobi += 1;
                    out.push(vec![(j, C64::new(1.0, 0.0) / diag)]);
                }
            }
        }
        if jacobi > 0 {
            log::warn!("SAI: {jacobi} columns fell back to Jacobi scaling");
        }
        // `out` holds columns; store rows for the matvec
        let matrix = CsrMatrix::from_rows(n, out).transpose();
        Ok(Self { matrix, thresholds, jacobi_columns: jacobi })
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// `‖I − Z P‖_F` for a (small) near block.
    pub fn frobenius_residual(near: &CsrMatrix, p: &CsrMatrix) -> f64 {
        let zp = near.to_dense() * p.to_dense();
        let n = zp.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                s += (d - zp[(i, j)]).norm_sqr();
            }
        }
        s.sqrt()
    }
}

fn column_pattern(j: usize, ci: &[usize], cv: &[C64], gmax: f64, t: &SaiThresholds) -> Vec<usize> {
    let cmax = cv.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut cand: Vec<(f64, usize)> = ci
        .iter()
        .zip(cv)
        .filter(|(&i, v)| i != j && v.norm() >= t.eps1 * gmax && v.norm() >= t.eps2 * cmax)
        .map(|(&i, v)| (v.norm(), i))
        .collect();
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let cap = ((t.eps3 * ci.len() as f64).ceil() as usize).max(1);
    let mut pattern: Vec<usize> = std::iter::once(j).chain(cand.into_iter().map(|c| c.1)).take(cap).collect();
    pattern.sort_unstable();
    pattern
}

impl LinearOperator for SaiPreconditioner {
    fn dim(&self) -> usize {
        self.matrix.nrows
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec(x, y)
    }
}
