//! Binary matrix files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "CMZ1"
//! kind    u32      0 = dense (column-major), 1 = CSR
//! n       u64      number of unknowns
//! k       f64      wavenumber (rad/m)
//! far     u32      far-pair points per triangle
//! near    u32      touching-pair points per triangle
//! split   u32      touching-pair outer subdivision
//! duffy   u32      touching-pair remainder Duffy order (0 = none)
//! dense:  n·n × (re f64, im f64)
//! csr:    nnz u64, (n+1) × u64 row pointers, nnz × u64 columns,
//!         nnz × (re f64, im f64)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::QuadratureOrders;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::{Error, Result, C64};

const MAGIC: &[u8; 4] = b"CMZ1";

#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub n: usize,
    pub k: f64,
    pub orders: QuadratureOrders,
}

#[derive(Clone, Debug)]
pub enum StoredMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

fn w_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}
fn w_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}
fn w_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn write_matrix(path: impl AsRef<Path>, header: &DumpHeader, m: &StoredMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    w_u32(&mut out, matches!(m, StoredMatrix::Sparse(_)) as u32);
    w_u64(&mut out, header.n as u64);
    w_f64(&mut out, header.k);
    w_u32(&mut out, header.orders.far as u32);
    w_u32(&mut out, header.orders.near as u32);
    w_u32(&mut out, header.orders.near_split as u32);
    w_u32(&mut out, header.orders.remainder_duffy as u32);
    match m {
        StoredMatrix::Dense(d) => {
            for z in d.iter() {
                w_f64(&mut out, z.re);
                w_f64(&mut out, z.im);
            }
        }
        StoredMatrix::Sparse(s) => {
            w_u64(&mut out, s.nnz() as u64);
            s.row_ptr.iter().for_each(|&p| w_u64(&mut out, p as u64));
            s.col_idx.iter().for_each(|&c| w_u64(&mut out, c as u64));
            for z in &s.values {
                w_f64(&mut out, z.re);
                w_f64(&mut out, z.im);
            }
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let s = self.buf.get(self.pos..self.pos + N).ok_or(Error::Parse {
            line: 0,
            msg: format!("truncated matrix file at byte {}", self.pos),
        })?;
        self.pos += N;
        Ok(s.try_into().expect("slice length"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take()?) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn c64(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<(DumpHeader, StoredMatrix)> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Parse { line: 0, msg: "bad magic, expected CMZ1".into() });
    }
    let kind = c.u32()?;
    let n = c.u64()?;
    let k = c.f64()?;
    let far = c.u32()? as usize;
    let near = c.u32()? as usize;
    let near_split = c.u32()? as usize;
    let remainder_duffy = c.u32()? as usize;
    let header = DumpHeader { n, k, orders: QuadratureOrders { far, near, near_split, remainder_duffy } };
    let m = match kind {
        0 => {
            let mut d = DenseMatrix::zeros(n, n);
            for z in d.iter_mut() {
                *z = c.c64()?;
            }
            StoredMatrix::Dense(d)
        }
        1 => {
            let nnz = c.u64()?;
            let row_ptr = (0..=n).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
            let col_idx = (0..nnz).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
            let values = (0..nnz).map(|_| c.c64()).collect::<Result<Vec<_>>>()?;
            StoredMatrix::Sparse(CsrMatrix { nrows: n, ncols: n, row_ptr, col_idx, values })
        }
        other => return Err(Error::Parse { line: 0, msg: format!("unknown matrix kind {other}") }),
    };
    Ok((header, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let h = DumpHeader { n: 3, k: 6.28, orders: QuadratureOrders::default() };
        let d = DenseMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64 * 0.5));
        let p = dir.path().join("d.bin");
        write_matrix(&p, &h, &StoredMatrix::Dense(d.clone())).unwrap();
        let (h2, m) = read_matrix(&p).unwrap();
        assert_eq!(h2, h);
        assert!(matches!(m, StoredMatrix::Dense(ref x) if *x == d));

        let s = CsrMatrix::from_rows(3, vec![vec![(0, C64::new(1.0, 2.0))], vec![], vec![(1, C64::new(-1.0, 0.0)), (2, C64::new(0.0, 3.0))]]);
        let p = dir.path().join("s.bin");
        write_matrix(&p, &h, &StoredMatrix::Sparse(s.clone())).unwrap();
        match read_matrix(&p).unwrap().1 {
            StoredMatrix::Sparse(x) => assert_eq!(x.to_dense(), s.to_dense()),
            _ => panic!("kind"),
        }
        std::fs::write(&p, b"XXXX").unwrap();
        assert!(read_matrix(&p).is_err());
    }
}
