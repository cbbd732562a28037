//! Starts ADMM exactly at a saddle of the two-node problem, where plain steps
//! cannot move, and lets the negative-curvature probe push it out.

use bm_admm::curvature::{solve_with_curvature_from, CurvatureOptions};
use bm_admm::{FactorMatrix, Penalty, Problem, SolverOptions, SparseSymMatrix};

fn main() -> bm_admm::Result<()> {
    let cost = SparseSymMatrix::from_dense(2, &[0.0, 1.0, 1.0, 0.0])?;
    let problem = Problem::sphere(cost, Some(2))?;
    let saddle = FactorMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
    let opts = SolverOptions { rho: Penalty::Theory, ..Default::default() };
    let curv = CurvatureOptions { eps: 1e-3, ..Default::default() };
    let out = solve_with_curvature_from(&problem, &opts, &curv, saddle)?;
    for rec in &out.trace.records {
        if let Some(c) = rec.curvature.filter(|c| c.probe_performed == 1) {
            println!("k={:3} probe lambda_H={:+.6} escaped={}", rec.k, c.lambda_h, c.escaped);
        }
    }
    println!("final objective {:.9} ({}), {} iterations", out.state.objective(), out.status.as_str(), out.iterations);
    Ok(())
}
