//! Runs ADMM and the Riemannian gradient baseline on the same random instance
//! and compares both against the full-rank oracle value.

use bm_admm::certify::{oracle_sdp, relative_gap};
use bm_admm::io::random::random_symmetric;
use bm_admm::rgd::{rgd_solve, RgdOptions};
use bm_admm::{solve, Problem, SolverOptions};

fn main() -> bm_admm::Result<()> {
    let cost = random_symmetric(150, 0.1, 42)?;
    let reference = oracle_sdp(&cost, 1, 3, 0)?;
    let problem = Problem::sphere(cost, None)?;
    println!("oracle value {:.9} (certified {})", reference.value, reference.certified());

    let admm = solve(&problem, &SolverOptions { tol_primal: 1e-6, ..Default::default() })?;
    let rgd = rgd_solve(&problem, &RgdOptions { grad_tol: 1e-6, ..Default::default() })?;
    for (name, f, it, secs, status) in [
        ("admm", admm.state.objective(), admm.iterations, admm.seconds, admm.status),
        ("rgd ", rgd.objective, rgd.iterations, rgd.seconds, rgd.status),
    ] {
        let gap = relative_gap(f, reference.value)?;
        println!("{name} f={f:.9} gap={gap:.2e} it={it:6} {secs:.3}s {}", status.as_str());
    }
    Ok(())
}
