//! Sparse symmetric cost matrices: storage, products with dense factors,
//! matrix norms and extreme-eigenvalue estimates.

pub mod eigen;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifold::FactorMatrix;
use eigen::{lanczos, SymOperator, Target};

/// Row count times factor width above which `spmm` splits rows across threads.
const PARALLEL_WORK: usize = 1 << 15;

/// Symmetric matrix in CSR layout with both triangles stored.
///
/// Immutable after construction. Column indices are strictly increasing
/// within each row and every stored `(i, j, v)` has a mirrored `(j, i, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if row_ptr.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                context: "row_ptr length",
                expected: n + 1,
                found: row_ptr.len(),
            });
        }
        if row_ptr[0] != 0 || row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMatrix("row_ptr must start at 0 and be nondecreasing".into()));
        }
        let nnz = row_ptr[n];
        if col_idx.len() != nnz || values.len() != nnz {
            return Err(Error::DimensionMismatch {
                context: "column/value array length",
                expected: nnz,
                found: col_idx.len().min(values.len()),
            });
        }
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has unsorted or duplicate column indices"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n) {
                return Err(Error::InvalidMatrix(format!("row {i} has a column index out of range")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let m = Self { n, row_ptr, col_idx, values };
        for i in 0..n {
            for (j, v) in m.row(i) {
                if m.get(j, i) != Some(v) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) has no identical mirrored entry"
                    )));
                }
            }
        }
        Ok(m)
    }

    /// Builds from `(i, j, v)` triplets (0-based). Every off-diagonal triplet
    /// is mirrored, so each unordered pair should appear once per
    /// contribution; duplicates are summed and exact zeros dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!("triplet ({i}, {j}) out of range for n = {n}")));
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_idx.push(j);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_csr(n, row_ptr, col_idx, values)
    }

    /// Builds from a dense row-major `n x n` matrix, which must be exactly symmetric.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "dense matrix length",
                expected: n * n,
                found: dense.len(),
            });
        }
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i..n {
                if dense[i * n + j] != dense[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("dense input not symmetric at ({i}, {j})")));
                }
                if dense[i * n + j] != 0.0 {
                    trip.push((i, j, dense[i * n + j]));
                }
            }
        }
        Self::from_triplets(n, trip)
    }

    /// The `n x n` zero matrix.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_triplets(n, std::iter::empty())
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(column, value)` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.values[range.start + k])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    /// `c * self`, keeping the sparsity pattern.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self - diag`, where `diag` holds `n` diagonal values.
    pub fn minus_diagonal(&self, diag: &[f64]) -> Result<Self> {
        self.minus_block_diagonal(diag, 1)
    }

    /// `self - blkdiag(blocks)` for symmetric `d x d` blocks stored row-major
    /// back to back.
    pub fn minus_block_diagonal(&self, blocks: &[f64], d: usize) -> Result<Self> {
        if d == 0 || self.n % d != 0 || blocks.len() != self.n * d {
            return Err(Error::DimensionMismatch {
                context: "block diagonal",
                expected: self.n * d,
                found: blocks.len(),
            });
        }
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.n * d);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j >= i {
                    trip.push((i, j, v));
                }
            }
        }
        for b in 0..self.n / d {
            for a in 0..d {
                for c in a..d {
                    let v = blocks[b * d * d + a * d + c];
                    if v != 0.0 {
                        trip.push((b * d + a, b * d + c, -v));
                    }
                }
            }
        }
        Self::from_triplets(self.n, trip)
    }

    /// Matrix-vector product.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }
}

impl SymOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv(x, y);
    }
}

fn spmm_row(c: &SparseSymMatrix, v: &FactorMatrix, i: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, cij) in c.row(i) {
        for (o, x) in out.iter_mut().zip(v.row(j)) {
            *o += cij * x;
        }
    }
}

/// `C * V`, accumulated row by row in ascending column order.
///
/// The result is bit-reproducible and independent of the thread count.
pub fn spmm(c: &SparseSymMatrix, v: &FactorMatrix) -> Result<FactorMatrix> {
    let mut out = FactorMatrix::zeros(c.n(), v.cols());
    spmm_into(c, v, &mut out)?;
    Ok(out)
}

/// In-place variant of [`spmm`].
pub fn spmm_into(c: &SparseSymMatrix, v: &FactorMatrix, out: &mut FactorMatrix) -> Result<()> {
    if v.rows() != c.n() {
        return Err(Error::DimensionMismatch {
            context: "spmm factor rows vs matrix dimension",
            expected: c.n(),
            found: v.rows(),
        });
    }
    if out.rows() != c.n() || out.cols() != v.cols() {
        *out = FactorMatrix::zeros(c.n(), v.cols());
    }
    let r = v.cols();
    if r == 0 {
        return Ok(());
    }
    if c.n() * r >= PARALLEL_WORK {
        out.as_mut_slice()
            .par_chunks_mut(r)
            .enumerate()
            .for_each(|(i, row)| spmm_row(c, v, i, row));
    } else {
        for (i, row) in out.as_mut_slice().chunks_mut(r).enumerate() {
            spmm_row(c, v, i, row);
        }
    }
    Ok(())
}

/// Maximum absolute row sum, `||C||_inf`. Equals `||C||_1` for symmetric `C`.
pub fn inf_norm(c: &SparseSymMatrix) -> f64 {
    (0..c.n())
        .map(|i| c.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute column sum, `||C||_1`.
pub fn one_norm(c: &SparseSymMatrix) -> f64 {
    let mut cols = vec![0.0; c.n()];
    for (&j, &v) in c.col_idx.iter().zip(&c.values) {
        cols[j] += v.abs();
    }
    cols.into_iter().fold(0.0, f64::max)
}

pub const DEFAULT_NORM_TOL: f64 = 1e-6;
pub const DEFAULT_EIG_MAX_ITER: usize = 5000;

/// Spectral norm estimate of a symmetric matrix, within `rel_tol` relative.
///
/// `max_iter` bounds the number of matrix-vector products.
pub fn two_norm_estimate(c: &SparseSymMatrix, rel_tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter("rel_tol must be positive".into()));
    }
    match lanczos(c, Target::LargestMagnitude, rel_tol, max_iter, seed) {
        Ok(p) => Ok(p.value.abs()),
        Err(p) => Err(Error::NotConverged {
            what: "two_norm_estimate",
            estimate: p.value.abs(),
            residual: p.residual,
            iterations: p.matvecs,
        }),
    }
}

/// Smallest eigenvalue and a unit eigenvector, with
/// `||S v - lambda v|| <= rel_tol * ||S||_2`.
pub fn min_eig_estimate(
    s: &SparseSymMatrix,
    rel_tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter("rel_tol must be positive".into()));
    }
    match lanczos(s, Target::Smallest, rel_tol, max_iter, seed) {
        Ok(p) => Ok((p.value, p.vector)),
        Err(p) => Err(Error::NotConverged {
            what: "min_eig_estimate",
            estimate: p.value,
            residual: p.residual,
            iterations: p.matvecs,
        }),
    }
}

/// Cached `||C||_2`, `||C||_inf` and `||C||_1` of a cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CostNorms {
    pub two: f64,
    pub inf: f64,
    pub one: f64,
}

impl CostNorms {
    pub fn compute(c: &SparseSymMatrix) -> Result<Self> {
        Ok(Self {
            two: two_norm_estimate(c, DEFAULT_NORM_TOL, DEFAULT_EIG_MAX_ITER, 0x5eed)?,
            inf: inf_norm(c),
            one: one_norm(c),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap2() -> SparseSymMatrix {
        SparseSymMatrix::from_dense(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn spmm_zero_matrix_gives_zero() {
        let c = SparseSymMatrix::zeros(3).unwrap();
        let v = FactorMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let out = spmm(&c, &v).unwrap();
        assert!(out.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn spmm_identity_is_noop() {
        let c = SparseSymMatrix::identity(3).unwrap();
        let v = FactorMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 4.0], vec![5.0, 6.0]]);
        assert_eq!(spmm(&c, &v).unwrap(), v);
    }

    #[test]
    fn spmm_swap_matrix() {
        let v = FactorMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = spmm(&swap2(), &v).unwrap();
        assert_eq!(out, FactorMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let v = FactorMatrix::zeros(3, 2);
        match spmm(&swap2(), &v) {
            Err(Error::DimensionMismatch { expected: 2, found: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn norms_of_small_matrices() {
        assert_eq!(inf_norm(&SparseSymMatrix::zeros(4).unwrap()), 0.0);
        assert_eq!(inf_norm(&swap2()), 1.0);
        let neg = SparseSymMatrix::from_dense(2, &[0.0, -2.0, -2.0, 0.0]).unwrap();
        assert_eq!(inf_norm(&neg), 2.0);
        assert_eq!(one_norm(&neg), 2.0);
    }

    #[test]
    fn two_norm_small() {
        let id = SparseSymMatrix::identity(5).unwrap();
        assert!((two_norm_estimate(&id, 1e-6, 5000, 1).unwrap() - 1.0).abs() <= 1e-6);
        assert!((two_norm_estimate(&swap2(), 1e-6, 5000, 1).unwrap() - 1.0).abs() <= 1e-6);
        assert_eq!(two_norm_estimate(&SparseSymMatrix::zeros(3).unwrap(), 1e-6, 5000, 1).unwrap(), 0.0);
    }

    #[test]
    fn min_eig_small() {
        let (l, v) = min_eig_estimate(&SparseSymMatrix::identity(4).unwrap(), 1e-8, 5000, 3).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((eigen::norm(&v) - 1.0).abs() < 1e-12);

        let (l, v) = min_eig_estimate(&swap2(), 1e-8, 5000, 3).unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].abs() - s).abs() < 1e-8 && (v[0] + v[1]).abs() < 1e-8);

        let d = SparseSymMatrix::from_dense(3, &[3.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 5.0]).unwrap();
        let (l, v) = min_eig_estimate(&d, 1e-8, 5000, 3).unwrap();
        assert!((l + 2.0).abs() < 1e-12);
        assert!((v[1].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_asymmetric_csr() {
        let r = SparseSymMatrix::from_csr(2, vec![0, 1, 1], vec![1], vec![1.0]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn triplets_sum_duplicates_and_mirror() {
        let c = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 2.0), (2, 2, -1.0)]).unwrap();
        assert_eq!(c.get(0, 1), Some(3.0));
        assert_eq!(c.get(1, 0), Some(3.0));
        assert_eq!(c.get(2, 2), Some(-1.0));
        assert_eq!(c.nnz(), 3);
    }
}
