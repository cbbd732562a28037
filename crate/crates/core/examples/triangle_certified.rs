//! The triangle graph has a known SDP optimum of −9/4 at the 120° configuration.
//! Solves it, checks the value and prints the dual certificate.

use bm_admm::certify::{brute_force_maxcut, dual_certificate};
use bm_admm::{solve, Graph, Problem, SolverOptions};

fn main() -> bm_admm::Result<()> {
    let graph = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])?;
    let problem = Problem::sphere(graph.maxcut_cost()?, Some(2))?;
    let out = solve(&problem, &SolverOptions { seed: 3, ..Default::default() })?;
    let cert = dual_certificate(&problem, out.state.sigma_tilde(), 1e-6)?;
    let (cut, _) = brute_force_maxcut(&graph)?;

    let s = out.state.sigma_tilde();
    for i in 0..3 {
        for j in i + 1..3 {
            let cos: f64 = s.row(i).iter().zip(s.row(j)).map(|(a, b)| a * b).sum();
            println!("angle({i},{j}) = {:.4} deg", cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
    }
    println!("objective {:.12} (expected -2.25)", out.state.objective());
    println!("multipliers {:?}", cert.lambda);
    println!("slack min eig {:.3e}, duality gap {:.3e}, certified {}", cert.slack_min_eig, cert.duality_gap, cert.certified);
    println!("relaxation bound {:.4} >= integer max cut {cut}", -out.state.objective());
    Ok(())
}
