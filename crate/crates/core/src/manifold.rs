//! Dense factor matrices and the geometry of sphere and Stiefel products.
//!
//! A factor `sigma` is an `n x r` row-major matrix read as `q` stacked
//! `d x r` blocks. The manifold `M` asks each block to have orthonormal rows
//! (`B B^T = I_d`); with `d = 1` that is a product of unit spheres.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::sym_eigen;

/// Ratio `sigma_min / sigma_max` at or below which a block counts as rank deficient.
pub const RANK_EPS: f64 = 1e-12;

/// Largest manifold violation tolerated by operations that require `sigma` on `M`.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

/// Block structure and rank of a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    /// Number of blocks.
    pub q: usize,
    /// Rows per block; `1` is the sphere case.
    pub d: usize,
    /// Factor width.
    pub r: usize,
}

impl ManifoldSpec {
    pub fn new(q: usize, d: usize, r: usize) -> Result<Self> {
        if q == 0 || d == 0 || r < d {
            return Err(Error::InvalidParameter(format!(
                "manifold needs q >= 1 and r >= d >= 1 (got q={q}, d={d}, r={r})"
            )));
        }
        Ok(Self { q, d, r })
    }

    pub fn sphere(n: usize, r: usize) -> Result<Self> {
        Self::new(n, 1, r)
    }

    pub fn n(&self) -> usize {
        self.q * self.d
    }

    pub fn is_sphere(&self) -> bool {
        self.d == 1
    }

    /// Dimension of the tangent space at any point of `M`.
    pub fn tangent_dim(&self) -> usize {
        self.q * (self.d * self.r - self.d * (self.d + 1) / 2)
    }
}

/// Default rank `ceil(sqrt(2n))`, floored at `d + 1` for block problems and
/// capped at `n`.
pub fn default_rank(n: usize, d: usize) -> usize {
    let r = ((2.0 * n as f64).sqrt().ceil() as usize).max(1);
    let r = if d > 1 { r.max(d + 1) } else { r };
    r.min(n.max(d))
}

/// Dense `rows x cols` real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "factor data length",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Rows `b*d .. (b+1)*d`, contiguous.
    pub fn block(&self, b: usize, d: usize) -> &[f64] {
        &self.data[b * d * self.cols..(b + 1) * d * self.cols]
    }

    pub fn block_mut(&mut self, b: usize, d: usize) -> &mut [f64] {
        &mut self.data[b * d * self.cols..(b + 1) * d * self.cols]
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `||self - other||_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
    }

    /// `a * self + b * other`.
    pub fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        Self {
            rows: x.rows,
            cols: x.cols,
            data: x.data.iter().zip(&y.data).map(|(p, q)| a * p + b * q).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Smallest Euclidean norm over rows (`d = 1`) or Frobenius norm over blocks.
    pub fn min_block_norm(&self, d: usize) -> f64 {
        (0..self.rows / d)
            .map(|b| self.block(b, d).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Polar factor of a `d x r` block given as a row-major slice, written to `out`.
/// Returns the singular value ratio `sigma_min / sigma_max` on failure.
fn polar_block(g: &[f64], d: usize, r: usize, out: &mut [f64]) -> std::result::Result<(), f64> {
    if d == 1 {
        let nrm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(0.0);
        }
        out.iter_mut().zip(g).for_each(|(o, x)| *o = x / nrm);
        return Ok(());
    }
    inv_sqrt_gram_apply(g, d, r, out)?;
    // a second pass on a near-orthonormal input restores orthonormality lost
    // to the conditioning of the Gram matrix
    let mut dev: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let ip: f64 = (0..r).map(|k| out[a * r + k] * out[b * r + k]).sum();
            dev = dev.max((ip - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    if dev > 1e-14 {
        let first = out.to_vec();
        inv_sqrt_gram_apply(&first, d, r, out)?;
    }
    Ok(())
}

fn inv_sqrt_gram_apply(g: &[f64], d: usize, r: usize, out: &mut [f64]) -> std::result::Result<(), f64> {
    let mut gram = vec![0.0; d * d];
    for a in 0..d {
        for b in a..d {
            let ip: f64 = (0..r).map(|k| g[a * r + k] * g[b * r + k]).sum();
            gram[a * d + b] = ip;
            gram[b * d + a] = ip;
        }
    }
    let (vals, vecs) = sym_eigen(&gram, d);
    let smax = vals[d - 1];
    let smin = vals[0];
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(0.0);
    }
    let ratio = (smin.max(0.0) / smax).sqrt();
    if ratio <= RANK_EPS {
        return Err(ratio);
    }
    // W diag(1/s) W^T
    let mut m = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            m[a * d + b] = (0..d).map(|k| vecs[a * d + k] * vecs[b * d + k] / vals[k].sqrt()).sum();
        }
    }
    for a in 0..d {
        for k in 0..r {
            out[a * r + k] = (0..d).map(|b| m[a * d + b] * g[b * r + k]).sum();
        }
    }
    Ok(())
}

/// Nearest `d x r` matrix with orthonormal rows, i.e. the orthogonal polar
/// factor of `g`. Errors when `g` is (numerically) rank deficient.
pub fn project_block(g: &FactorMatrix) -> Result<FactorMatrix> {
    let (d, r) = (g.rows(), g.cols());
    if d == 0 || r < d {
        return Err(Error::InvalidParameter(format!("block must satisfy r >= d >= 1 (got {d} x {r})")));
    }
    let mut out = FactorMatrix::zeros(d, r);
    polar_block(g.as_slice(), d, r, out.as_mut_slice())
        .map_err(|ratio| Error::DegenerateProjection { block: 0, ratio })?;
    Ok(out)
}

/// Divides every row by its Euclidean norm.
pub fn normalize_rows(g: &FactorMatrix) -> Result<FactorMatrix> {
    let mut out = g.clone();
    for i in 0..g.rows() {
        let row = out.row_mut(i);
        let nrm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::ZeroRow { row: i });
        }
        row.iter_mut().for_each(|x| *x /= nrm);
    }
    Ok(out)
}

/// Projects every block of `g` onto `M`. Errors name the first degenerate block.
pub fn project(spec: &ManifoldSpec, g: &FactorMatrix) -> Result<FactorMatrix> {
    check_shape(spec, g)?;
    if spec.d == 1 {
        return normalize_rows(g);
    }
    let mut out = FactorMatrix::zeros(g.rows(), g.cols());
    project_into(spec, g, &mut out)?;
    Ok(out)
}

pub(crate) fn project_into(spec: &ManifoldSpec, g: &FactorMatrix, out: &mut FactorMatrix) -> Result<()> {
    let (d, r) = (spec.d, spec.r);
    for b in 0..spec.q {
        polar_block(g.block(b, d), d, r, out.block_mut(b, d)).map_err(|ratio| {
            if d == 1 {
                Error::ZeroRow { row: b }
            } else {
                Error::DegenerateProjection { block: b, ratio }
            }
        })?;
    }
    Ok(())
}

pub(crate) fn check_shape(spec: &ManifoldSpec, g: &FactorMatrix) -> Result<()> {
    if g.rows() != spec.n() {
        return Err(Error::DimensionMismatch {
            context: "factor rows vs manifold",
            expected: spec.n(),
            found: g.rows(),
        });
    }
    if g.cols() != spec.r {
        return Err(Error::DimensionMismatch {
            context: "factor columns vs rank",
            expected: spec.r,
            found: g.cols(),
        });
    }
    Ok(())
}

/// Largest entry of `|B B^T - I_d|` over all blocks.
pub fn manifold_violation(spec: &ManifoldSpec, sigma: &FactorMatrix) -> f64 {
    let (d, r) = (spec.d, spec.r);
    let mut worst: f64 = 0.0;
    for b in 0..spec.q {
        let blk = sigma.block(b, d);
        for a in 0..d {
            for c in a..d {
                let ip: f64 = (0..r).map(|k| blk[a * r + k] * blk[c * r + k]).sum();
                worst = worst.max((ip - if a == c { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    worst
}

pub(crate) fn require_on_manifold(spec: &ManifoldSpec, sigma: &FactorMatrix) -> Result<()> {
    check_shape(spec, sigma)?;
    let violation = manifold_violation(spec, sigma);
    if !(violation <= ON_MANIFOLD_TOL) {
        return Err(Error::OffManifold { violation });
    }
    Ok(())
}

/// Orthogonal projection of `g` onto the tangent space at `sigma`.
///
/// Sphere rows: `u_i = g_i - <sigma_i, g_i> sigma_i`. Stiefel blocks:
/// `u_i = g_i - sym(g_i sigma_i^T) sigma_i`.
pub fn tangent_project(spec: &ManifoldSpec, sigma: &FactorMatrix, g: &FactorMatrix) -> Result<FactorMatrix> {
    require_on_manifold(spec, sigma)?;
    check_shape(spec, g)?;
    Ok(tangent_project_unchecked(spec, sigma, g))
}

pub(crate) fn tangent_project_unchecked(spec: &ManifoldSpec, sigma: &FactorMatrix, g: &FactorMatrix) -> FactorMatrix {
    let (d, r) = (spec.d, spec.r);
    let mut out = g.clone();
    let mut sym = vec![0.0; d * d];
    for b in 0..spec.q {
        let s = sigma.block(b, d);
        let gb = g.block(b, d);
        for a in 0..d {
            for c in 0..d {
                let gs: f64 = (0..r).map(|k| gb[a * r + k] * s[c * r + k]).sum();
                let sg: f64 = (0..r).map(|k| gb[c * r + k] * s[a * r + k]).sum();
                sym[a * d + c] = 0.5 * (gs + sg);
            }
        }
        let ob = out.block_mut(b, d);
        for a in 0..d {
            for c in 0..d {
                let w = sym[a * d + c];
                for k in 0..r {
                    ob[a * r + k] -= w * s[c * r + k];
                }
            }
        }
    }
    out
}

/// Largest entry of `g - P_T(g)`, zero exactly when `g` is tangent at `sigma`.
pub fn tangent_violation(spec: &ManifoldSpec, sigma: &FactorMatrix, g: &FactorMatrix) -> Result<f64> {
    check_shape(spec, sigma)?;
    check_shape(spec, g)?;
    let p = tangent_project_unchecked(spec, sigma, g);
    Ok(g.as_slice().iter().zip(p.as_slice()).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Moves each sphere row along its great circle:
/// `sigma_i cos(|u_i| t) + (u_i / |u_i|) sin(|u_i| t)`; rows with `u_i = 0`
/// are unchanged.
pub fn geodesic_step(spec: &ManifoldSpec, sigma: &FactorMatrix, u: &FactorMatrix, t: f64) -> Result<FactorMatrix> {
    if spec.d != 1 {
        return Err(Error::Unsupported("geodesic steps are only defined for the sphere case (d = 1)".into()));
    }
    check_shape(spec, sigma)?;
    check_shape(spec, u)?;
    let mut out = sigma.clone();
    for i in 0..sigma.rows() {
        let ui = u.row(i);
        let un = ui.iter().map(|x| x * x).sum::<f64>().sqrt();
        if un == 0.0 {
            continue;
        }
        let (sn, cs) = (un * t).sin_cos();
        let row = out.row_mut(i);
        for (o, x) in row.iter_mut().zip(ui) {
            *o = *o * cs + x / un * sn;
        }
        let nrm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        row.iter_mut().for_each(|x| *x /= nrm);
    }
    Ok(out)
}

/// Entries uniform on `[0, 1]` from a seeded generator, then projected onto `M`.
pub fn random_point(spec: &ManifoldSpec, seed: u64) -> Result<FactorMatrix> {
    let mut last = None;
    for attempt in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let data: Vec<f64> = (0..spec.n() * spec.r).map(|_| rng.gen::<f64>()).collect();
        let g = FactorMatrix::from_vec(spec.n(), spec.r, data)?;
        match project(spec, &g) {
            Ok(p) => return Ok(p),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("eight attempts ran"))
}
