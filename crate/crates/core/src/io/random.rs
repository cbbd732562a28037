//! Seeded random sphere-constrained costs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;

/// Symmetric `n×n` cost with zero diagonal; each pair `i < j` is kept with
/// probability `density` and then gets a uniform `[−1, 1]` value.
pub fn random_symmetric(n: usize, density: f64, seed: u64) -> Result<SparseSymMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if density < 1.0 && rng.gen::<f64>() >= density {
                continue;
            }
            trip.push((i, j, rng.gen_range(-1.0..=1.0)));
        }
    }
    SparseSymMatrix::from_triplets(n, trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_shapes() {
        let c = random_symmetric(30, 1.0, 4).unwrap();
        assert_eq!(c.nnz(), 30 * 29);
        assert!((0..30).all(|i| c.get(i, i).is_none()));
        let s = random_symmetric(200, 0.05, 4).unwrap();
        let pairs = s.nnz() as f64 / 2.0;
        let mean = 0.05 * 19900.0;
        assert!((pairs - mean).abs() < 4.0 * (mean * 0.95f64).sqrt());
        assert_eq!(s, random_symmetric(200, 0.05, 4).unwrap());
        assert!(random_symmetric(5, 0.0, 1).is_err());
    }
}
