//! Synthetic block-sparse costs for rotation synchronization (`d = 3`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;
use crate::problem::Problem;

pub const SO3_BLOCK: usize = 3;

#[derive(Debug, Clone)]
pub struct So3Instance {
    pub q: usize,
    pub sparsity: f64,
    pub seed: u64,
    pub cost: SparseSymMatrix,
    /// Number of populated block pairs `(i, j)`, `i < j`.
    pub populated_pairs: usize,
}

impl So3Instance {
    pub fn problem(&self, rank: Option<usize>) -> Result<Problem> {
        Problem::new(self.cost.clone(), SO3_BLOCK, rank)
    }
}

/// Each block pair `i < j` is populated with probability `s`, in row-major
/// pair order, by a `3×3` block of i.i.d. uniform `[−1, 1]` entries; the
/// transposed block fills `(j, i)` and diagonal blocks stay zero.
pub fn generate_so3(q: usize, s: f64, seed: u64) -> Result<So3Instance> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("need at least two blocks, got q = {q}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("sparsity must lie in [0, 1], got {s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    let mut pairs = 0;
    for i in 0..q {
        for j in i + 1..q {
            if rng.gen::<f64>() >= s {
                continue;
            }
            pairs += 1;
            for a in 0..SO3_BLOCK {
                for b in 0..SO3_BLOCK {
                    let v: f64 = rng.gen_range(-1.0..=1.0);
                    trip.push((SO3_BLOCK * i + a, SO3_BLOCK * j + b, v));
                }
            }
        }
    }
    let cost = SparseSymMatrix::from_triplets(SO3_BLOCK * q, trip)?;
    Ok(So3Instance { q, sparsity: s, seed, cost, populated_pairs: pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sparsity_is_zero_matrix() {
        let inst = generate_so3(5, 0.0, 1).unwrap();
        assert_eq!(inst.cost.nnz(), 0);
        assert_eq!(inst.cost.n(), 15);
    }

    #[test]
    fn full_two_blocks_has_one_pair() {
        let inst = generate_so3(2, 1.0, 3).unwrap();
        assert_eq!(inst.populated_pairs, 1);
        assert_eq!(inst.cost.nnz(), 18);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(inst.cost.get(a, b), None);
                assert_eq!(inst.cost.get(a, 3 + b), inst.cost.get(3 + b, a));
            }
        }
    }

    #[test]
    fn pair_count_is_binomial() {
        let inst = generate_so3(100, 0.02, 7).unwrap();
        let trials = 100.0 * 99.0 / 2.0;
        let mean = 0.02 * trials;
        let sd = (trials * 0.02 * 0.98f64).sqrt();
        assert!((inst.populated_pairs as f64 - mean).abs() <= 3.0 * sd, "{}", inst.populated_pairs);
    }

    #[test]
    fn deterministic_and_bit_symmetric() {
        let a = generate_so3(20, 0.3, 11).unwrap();
        let b = generate_so3(20, 0.3, 11).unwrap();
        assert_eq!(a.cost, b.cost);
        let n = a.cost.n();
        for i in 0..n {
            for (j, v) in a.cost.row(i) {
                assert_eq!(a.cost.get(j, i).map(f64::to_bits), Some(v.to_bits()));
            }
        }
        assert!(generate_so3(1, 0.5, 0).is_err());
        assert!(generate_so3(3, 1.5, 0).is_err());
    }
}
