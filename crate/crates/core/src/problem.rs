use crate::error::{Error, Result};
use crate::linalg::{CostNorms, SparseSymMatrix};
use crate::manifold::{default_rank, ManifoldSpec};

/// A cost matrix together with the manifold its factor lives on.
///
/// The three norms of `C` are computed once here and reused by every solver.
#[derive(Debug, Clone)]
pub struct Problem {
    cost: SparseSymMatrix,
    manifold: ManifoldSpec,
    norms: CostNorms,
}

impl Problem {
    /// `d` is the block size (`1` for sphere constraints); `rank = None`
    /// picks [`default_rank`].
    pub fn new(cost: SparseSymMatrix, d: usize, rank: Option<usize>) -> Result<Self> {
        let n = cost.n();
        if d == 0 || n % d != 0 {
            return Err(Error::InvalidParameter(format!("block size {d} does not divide n = {n}")));
        }
        let r = rank.unwrap_or_else(|| default_rank(n, d));
        let manifold = ManifoldSpec::new(n / d, d, r)?;
        let norms = CostNorms::compute(&cost)?;
        Ok(Self { cost, manifold, norms })
    }

    /// Sphere-constrained problem (`d = 1`).
    pub fn sphere(cost: SparseSymMatrix, rank: Option<usize>) -> Result<Self> {
        Self::new(cost, 1, rank)
    }

    pub fn cost(&self) -> &SparseSymMatrix {
        &self.cost
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn norms(&self) -> &CostNorms {
        &self.norms
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }

    pub fn rank(&self) -> usize {
        self.manifold.r
    }

    /// Same cost and blocks at a different rank.
    pub fn with_rank(&self, r: usize) -> Result<Self> {
        Ok(Self {
            cost: self.cost.clone(),
            manifold: ManifoldSpec::new(self.manifold.q, self.manifold.d, r)?,
            norms: self.norms,
        })
    }

    /// The problem with cost `c * C`; norms are rescaled rather than re-estimated.
    pub fn scaled(&self, c: f64) -> Self {
        let a = c.abs();
        Self {
            cost: self.cost.scaled(c),
            manifold: self.manifold,
            norms: CostNorms {
                two: a * self.norms.two,
                inf: a * self.norms.inf,
                one: a * self.norms.one,
            },
        }
    }
}
