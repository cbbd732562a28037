//! Runs theory-mode ADMM with every runtime invariant check enabled on a few
//! random instances and reports how the twin function and `γ` norms behaved.

use bm_admm::admm::{gamma_floor, AdmmSolver, Penalty, SolverOptions};
use bm_admm::io::random::random_symmetric;
use bm_admm::Problem;

fn main() -> bm_admm::Result<()> {
    for (seed, n, density) in [(1u64, 40usize, 1.0), (2, 120, 0.05), (3, 200, 1.0)] {
        let problem = Problem::sphere(random_symmetric(n, density, seed)?, None)?;
        let opts = SolverOptions { rho: Penalty::Theory, check_invariants: true, seed, ..Default::default() };
        let mut solver = AdmmSolver::new(&problem, opts)?;
        let norms = *problem.norms();
        let floor = -(n as f64) * norms.inf;
        let mut worst_gamma = f64::INFINITY;
        let mut min_decrease = f64::INFINITY;
        let mut last = None;
        for _ in 0..3000 {
            let rep = solver.step()?;
            if rep.k >= 3 {
                worst_gamma = worst_gamma.min(rep.min_gamma);
                min_decrease = min_decrease.min(rep.decrease);
            }
            last = Some(rep);
        }
        let rep = last.expect("ran at least one step");
        println!(
            "n={n:4} density={density:4}: rho={:.3} G={:.6} (floor {:.1}) min|gamma|={:.4} (bound {:.2}) min dG={:.2e} link={:.1e}",
            solver.rho(),
            rep.lagrangian,
            floor,
            worst_gamma,
            gamma_floor(10.0),
            min_decrease,
            rep.link_residual
        );
    }
    Ok(())
}
