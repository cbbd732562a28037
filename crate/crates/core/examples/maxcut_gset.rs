//! Solves the max-cut relaxation of a Gset-format graph and rounds the factor
//! with random hyperplanes.
//!
//! `cargo run --example maxcut_gset -- crates/core/data/petersen.txt`

use bm_admm::certify::dual_certificate;
use bm_admm::io::gset::read_gset;
use bm_admm::{solve, Problem, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn main() -> bm_admm::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/petersen.txt"));
    let inst = read_gset(&path)?;
    let problem = Problem::sphere(inst.graph.maxcut_cost()?, None)?;
    let out = solve(&problem, &SolverOptions::default())?;
    let sigma = out.state.sigma_tilde();
    let cert = dual_certificate(&problem, sigma, 1e-6)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut best = 0.0f64;
    for _ in 0..64 {
        let h: Vec<f64> = (0..problem.rank()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let side: Vec<bool> =
            (0..problem.n()).map(|i| sigma.row(i).iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() >= 0.0).collect();
        best = best.max(inst.graph.cut_value(&side));
    }

    println!("{}: n={} edges={} r={}", inst.name, inst.n(), inst.graph.edges().len(), problem.rank());
    println!("status {} after {} iterations", out.status.as_str(), out.iterations);
    println!("SDP upper bound on the cut  {:.6}", -out.state.objective());
    println!("certified {} (slack min eig {:.2e}, relative gap {:.2e})", cert.certified, cert.slack_min_eig, cert.relative_gap());
    println!("best rounded cut            {best}");
    Ok(())
}
