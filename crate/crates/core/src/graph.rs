//! Weighted undirected graphs and the max-cut cost `C = −L/4`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// `(i, j, w)` with `i < j`, sorted, duplicates merged.
    edges: Vec<(usize, usize, f64)>,
    self_loops_dropped: usize,
}

impl Graph {
    /// Builds a graph from 0-based edges. Parallel edges are summed and self-loops dropped.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut loops = 0;
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite weight on edge ({i}, {j})")));
            }
            if i == j {
                loops += 1;
                continue;
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        Ok(Self {
            n,
            edges: merged.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
            self_loops_dropped: loops,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Weighted Laplacian `D − W`.
    pub fn laplacian(&self) -> Result<SparseSymMatrix> {
        let mut deg = vec![0.0; self.n];
        let mut trip = Vec::with_capacity(self.edges.len() + self.n);
        for &(i, j, w) in &self.edges {
            deg[i] += w;
            deg[j] += w;
            trip.push((i, j, -w));
        }
        trip.extend(deg.iter().enumerate().map(|(i, &d)| (i, i, d)));
        SparseSymMatrix::from_triplets(self.n, trip)
    }

    /// `C = −(D − W)/4`, so that `⟨C, xxᵀ⟩ = −cut(x)` for `x ∈ {±1}ⁿ`.
    pub fn maxcut_cost(&self) -> Result<SparseSymMatrix> {
        Ok(self.laplacian()?.scaled(-0.25))
    }

    /// Total weight of edges whose endpoints lie on different sides.
    pub fn cut_value(&self, side: &[bool]) -> f64 {
        self.edges.iter().filter(|(i, j, _)| side[*i] != side[*j]).map(|e| e.2).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates_and_drops_loops() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 3.0), (1, 2, 1.0)]);
        assert_eq!(g.self_loops_dropped(), 1);
        assert!(Graph::new(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn cost_matches_negative_cut() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let c = g.maxcut_cost().unwrap();
        assert_eq!(c.get(0, 0), Some(-0.5));
        assert_eq!(c.get(0, 1), Some(0.25));
        let side = [true, false, false];
        let x: Vec<f64> = side.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        let mut cx = vec![0.0; 3];
        c.spmv(&x, &mut cx);
        let f: f64 = cx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert_eq!(f, -g.cut_value(&side));
    }
}
