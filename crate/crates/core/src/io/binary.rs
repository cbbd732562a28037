//! Little-endian CSR problem file.
//!
//! ```text
//! u64 n | u64 nnz | u64 d | u64 row_ptr[n+1] | u64 col_idx[nnz] | f64 values[nnz]
//! ```
//!
//! Both triangles are stored; `d` is the block size (`1` for sphere problems).

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;

pub fn encode(c: &SparseSymMatrix, d: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * (4 + c.n() + 2 * c.nnz()));
    for v in [c.n(), c.nnz(), d] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &p in c.row_ptr() {
        out.extend_from_slice(&(p as u64).to_le_bytes());
    }
    for &j in c.col_idx() {
        out.extend_from_slice(&(j as u64).to_le_bytes());
    }
    for &v in c.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn word(&mut self) -> Result<[u8; 8]> {
        let end = self.pos + 8;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::InvalidMatrix(format!("truncated problem file at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("eight bytes"))
    }

    fn index(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.word()?))
            .map_err(|_| Error::InvalidMatrix("index does not fit in usize".into()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(SparseSymMatrix, usize)> {
    let mut r = Reader { bytes, pos: 0 };
    let n = r.index()?;
    let nnz = r.index()?;
    let d = r.index()?;
    let expected = 8usize
        .checked_mul(3 + n + 1 + 2 * nnz)
        .ok_or_else(|| Error::InvalidMatrix("header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::InvalidMatrix(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let row_ptr = (0..=n).map(|_| r.index()).collect::<Result<Vec<_>>>()?;
    let col_idx = (0..nnz).map(|_| r.index()).collect::<Result<Vec<_>>>()?;
    let values = (0..nnz).map(|_| r.word().map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
    if d == 0 || n % d != 0 {
        return Err(Error::InvalidMatrix(format!("block size {d} does not divide n = {n}")));
    }
    Ok((SparseSymMatrix::from_csr(n, row_ptr, col_idx, values)?, d))
}

pub fn write_problem(path: &Path, c: &SparseSymMatrix, d: usize) -> Result<()> {
    crate::trace::write_atomic(path, &encode(c, d))
}

pub fn read_problem(path: &Path) -> Result<(SparseSymMatrix, usize)> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let c = SparseSymMatrix::from_dense(2, &[0.0, 1.5, 1.5, 0.0]).unwrap();
        let b = encode(&c, 1);
        assert_eq!(b.len(), 8 * (3 + 3 + 2 + 2));
        assert_eq!(&b[0..8], &2u64.to_le_bytes());
        assert_eq!(&b[8..16], &2u64.to_le_bytes());
        assert_eq!(&b[16..24], &1u64.to_le_bytes());
        assert_eq!(&b[b.len() - 8..], &1.5f64.to_le_bytes());
        let (back, d) = decode(&b).unwrap();
        assert_eq!((back, d), (c, 1));
    }

    #[test]
    fn rejects_truncation_and_bad_blocks() {
        let c = SparseSymMatrix::identity(3).unwrap();
        let b = encode(&c, 1);
        assert!(decode(&b[..b.len() - 1]).is_err());
        assert!(decode(&encode(&c, 2)).is_err());
    }
}
