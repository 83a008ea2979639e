//! Small vector kernels, a CSR matrix and the operator trait shared by the
//! Krylov and eigen solvers.

use nalgebra::DMatrix;

use crate::C64;

pub type DenseMatrix = DMatrix<C64>;

/// A linear map `y = A x` on complex vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
}

/// Dense matrix as an operator (row-major loop; nalgebra storage is column-major).
pub struct DenseOperator<'a> {
    pub matrix: &'a DenseMatrix,
}

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        dense_matvec(self.matrix, x, y);
    }
}

/// `y = A x` for a column-major dense matrix.
pub fn dense_matvec(a: &DenseMatrix, x: &[C64], y: &mut [C64]) {
    let n = a.nrows();
    y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for (j, xj) in x.iter().enumerate() {
        if *xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.column(j);
        for i in 0..n {
            y[i] += col[i] * xj;
        }
    }
}

/// Real dense operator stored column-major (R or X views of a dense Z).
pub struct RealDenseOperator {
    pub n: usize,
    pub data: Vec<f64>,
}

impl RealDenseOperator {
    pub fn real_part(z: &DenseMatrix) -> Self {
        Self {
            n: z.nrows(),
            data: z.iter().map(|c| c.re).collect(),
        }
    }
    pub fn imag_part(z: &DenseMatrix) -> Self {
        Self {
            n: z.nrows(),
            data: z.iter().map(|c| c.im).collect(),
        }
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }
}

impl LinearOperator for RealDenseOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (j, xj) in x.iter().enumerate() {
            let col = &self.data[j * self.n..(j + 1) * self.n];
            for (yi, a) in y.iter_mut().zip(col) {
                *yi += xj * *a;
            }
        }
    }
}

/// Compressed sparse row matrix with complex values.
#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; columns are sorted per row.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|p| vals[p])
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            values: self.values.iter().map(|v| f(*v)).collect(),
            ..self.clone()
        }
    }

    /// Keeps the entries for which `keep(row, col)` is true.
    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let rows = (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter()
                    .zip(v)
                    .filter(|(j, _)| keep(i, **j))
                    .map(|(j, v)| (*j, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    /// Column-oriented copy (CSR of the transpose).
    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, val) in c.iter().zip(v) {
                rows[*j].push((i, *val));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, val) in c.iter().zip(v) {
                m[(i, *j)] = *val;
            }
        }
        m
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y)
    }
}

/// Conjugated inner product `xᴴ y`.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Bilinear product `xᵀ y`.
pub fn dotu(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += a x`
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: C64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

/// `‖a − b‖ / ‖b‖`
pub fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    num.sqrt() / norm(b)
}

/// Complex Givens rotation zeroing `b` in `(a, b)`: returns `(c, s, r)` with
/// `[c s; -s̄ c] [a; b] = [r; 0]`, `c` real.
pub fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0), a);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn, C64::new(bn, 0.0));
    }
    let t = an.hypot(bn);
    let c = an / t;
    let phase = a / an;
    let s = phase * b.conj() / t;
    (c, s, phase * t)
}

/// Solves the upper-triangular system `R y = g` (leading `k×k` block).
pub fn back_substitute(r: &DenseMatrix, g: &[C64], k: usize) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= r[(i, j)] * y[j];
        }
        y[i] = s / r[(i, i)];
    }
    y
}

/// Dense complex least squares `min ‖A x − b‖₂` via Householder QR.
/// Returns `None` when `A` is numerically rank deficient.
pub fn least_squares(a: &DenseMatrix, b: &[C64]) -> Option<Vec<C64>> {
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return None;
    }
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut max_diag: f64 = 0.0;
    for k in 0..n {
        let norm_x: f64 = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            return None;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        let mut v: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: C64 = v.iter().enumerate().map(|(p, vi)| vi.conj() * r[(k + p, j)]).sum();
                let f = s * 2.0 / vnorm2;
                for (p, vi) in v.iter().enumerate() {
                    r[(k + p, j)] -= vi * f;
                }
            }
            let s: C64 = v.iter().enumerate().map(|(p, vi)| vi.conj() * rhs[k + p]).sum();
            let f = s * 2.0 / vnorm2;
            for (p, vi) in v.iter().enumerate() {
                rhs[k + p] -= vi * f;
            }
        }
        max_diag = max_diag.max(r[(k, k)].norm());
    }
    let min_diag = (0..n).map(|k| r[(k, k)].norm()).fold(f64::INFINITY, f64::min);
    if min_diag <= 1e-13 * max_diag {
        return None;
    }
    Some(back_substitute(&r, &rhs, n))
}
