//! Riemannian gradient descent with Armijo backtracking and a projection
//! retraction, used as a baseline and as a polishing stage.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::admm::{SolveStatus, SolverState};
use crate::error::{Error, Result};
use crate::linalg::spmm;
use crate::manifold::{project_into, random_point, require_on_manifold, tangent_project_unchecked, FactorMatrix};
use crate::problem::Problem;
use crate::trace::{Trace, TraceRecord};

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RgdOptions {
    /// First trial step; `None` means `1/‖C‖₂`.
    pub initial_step: Option<f64>,
    pub backtrack: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_iter: usize,
    /// Stop once `‖grad‖_F ≤ grad_tol·(1 + ‖C‖₂)`.
    pub grad_tol: f64,
    pub seed: u64,
    pub trace_every: usize,
    pub wall_clock: bool,
    pub time_limit: Option<f64>,
}

impl Default for RgdOptions {
    fn default() -> Self {
        Self {
            initial_step: None,
            backtrack: 0.5,
            armijo: 1e-4,
            max_iter: 100_000,
            grad_tol: 1e-8,
            seed: 0,
            trace_every: 1,
            wall_clock: true,
            time_limit: None,
        }
    }
}

impl RgdOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.grad_tol > 0.0
            && self.trace_every > 0
            && self.initial_step.map_or(true, |t| t > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("rgd options must be positive with backtrack < 1".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RgdStep {
    pub sigma: FactorMatrix,
    pub objective: f64,
    /// Riemannian gradient norm at the input point.
    pub grad_norm: f64,
    /// Accepted step length, zero when no move was made.
    pub step: f64,
    pub stalled: bool,
}

/// Euclidean gradient `2Cσ` projected onto the tangent space.
fn grad_and_objective(problem: &Problem, sigma: &FactorMatrix) -> Result<(FactorMatrix, f64)> {
    let cs = spmm(problem.cost(), sigma)?;
    let f = cs.dot(sigma);
    Ok((tangent_project_unchecked(problem.manifold(), sigma, &cs.scaled(2.0)), f))
}

/// One backtracking step `σ' = R(σ − t·grad f(σ))`.
pub fn rgd_step(problem: &Problem, sigma: &FactorMatrix, opts: &RgdOptions) -> Result<RgdStep> {
    let spec = problem.manifold();
    require_on_manifold(spec, sigma)?;
    opts.validate()?;
    let (g, f) = grad_and_objective(problem, sigma)?;
    let gn = g.norm();
    let unchanged = |stalled| RgdStep { sigma: sigma.clone(), objective: f, grad_norm: gn, step: 0.0, stalled };
    if gn == 0.0 {
        return Ok(unchanged(false));
    }
    let mut t = opts.initial_step.unwrap_or(1.0 / problem.norms().two);
    let mut trial = FactorMatrix::zeros(sigma.rows(), sigma.cols());
    for _ in 0..=MAX_HALVINGS {
        let moved = FactorMatrix::lin_comb(1.0, sigma, -t, &g);
        if project_into(spec, &moved, &mut trial).is_ok() {
            let ft = spmm(problem.cost(), &trial)?.dot(&trial);
            if ft <= f - opts.armijo * t * gn * gn {
                return Ok(RgdStep { sigma: trial, objective: ft, grad_norm: gn, step: t, stalled: false });
            }
        }
        t *= opts.backtrack;
    }
    Ok(unchanged(true))
}

pub struct RgdOutcome {
    pub sigma: FactorMatrix,
    pub objective: f64,
    pub grad_norm: f64,
    pub trace: Trace,
    pub status: SolveStatus,
    pub iterations: usize,
    pub seconds: f64,
}

impl RgdOutcome {
    /// Wraps the result as a splitting state with `σ = σ̃`, for code that consumes [`SolverState`].
    pub fn into_state(self, problem: &Problem, rho: f64) -> Result<SolverState> {
        SolverState::initial(problem, self.sigma, rho, 0.0)
    }
}

/// Runs RGD from a seeded random point.
pub fn rgd_solve(problem: &Problem, opts: &RgdOptions) -> Result<RgdOutcome> {
    let start = random_point(problem.manifold(), opts.seed)?;
    rgd_solve_from(problem, opts, start)
}

/// Trace rows reuse the ADMM columns: `lagrangian` repeats the objective,
/// `primal_res` holds `‖grad‖_F`, both step columns hold `‖σᵏ⁺¹ − σᵏ‖_F`
/// and `min_gamma` holds the accepted step length.
pub fn rgd_solve_from(problem: &Problem, opts: &RgdOptions, start: FactorMatrix) -> Result<RgdOutcome> {
    opts.validate()?;
    let spec = problem.manifold();
    let mut sigma = FactorMatrix::zeros(spec.n(), spec.r);
    crate::manifold::check_shape(spec, &start)?;
    project_into(spec, &start, &mut sigma)?;
    let clock = Instant::now();
    let elapsed = |c: &Instant| if opts.wall_clock { c.elapsed().as_secs_f64() } else { 0.0 };
    let tol = opts.grad_tol * (1.0 + problem.norms().two);
    let mut trace = Trace::default();
    let mut k = 0usize;
    let mut status = SolveStatus::MaxIter;
    let (g0, mut f) = grad_and_objective(problem, &sigma)?;
    let mut gn = g0.norm();
    let rec = |k: usize, f: f64, gn: f64, step: f64, t: f64, secs: f64| TraceRecord {
        k,
        objective: f,
        lagrangian: f,
        primal_res: gn,
        step_tilde: step,
        step_sigma: step,
        min_gamma: t,
        seconds: secs,
        curvature: None,
    };
    let mut last = (0.0, 0.0);
    loop {
        if gn <= tol {
            status = SolveStatus::Converged;
            break;
        }
        if k >= opts.max_iter || opts.time_limit.is_some_and(|t| clock.elapsed().as_secs_f64() > t) {
            break;
        }
        let s = rgd_step(problem, &sigma, opts)?;
        if s.stalled {
            status = SolveStatus::Stalled;
            break;
        }
        let moved = s.sigma.distance(&sigma);
        sigma = s.sigma;
        f = s.objective;
        k += 1;
        last = (moved, s.step);
        let (g, _) = grad_and_objective(problem, &sigma)?;
        gn = g.norm();
        if k % opts.trace_every == 0 {
            trace.push(rec(k, f, gn, moved, s.step, elapsed(&clock)));
        }
    }
    if trace.last().map(|r| r.k) != Some(k) {
        trace.push(rec(k, f, gn, last.0, last.1, elapsed(&clock)));
    }
    Ok(RgdOutcome { sigma, objective: f, grad_norm: gn, trace, status, iterations: k, seconds: elapsed(&clock) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseSymMatrix;

    fn edge() -> Problem {
        Problem::sphere(SparseSymMatrix::from_dense(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(), Some(2)).unwrap()
    }

    #[test]
    fn stationary_and_zero_cost_points_do_not_move() {
        let p = edge();
        let s = FactorMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let out = rgd_step(&p, &s, &RgdOptions::default()).unwrap();
        assert_eq!(out.sigma, s);
        assert!(!out.stalled);
        let z = Problem::sphere(SparseSymMatrix::zeros(2).unwrap(), Some(2)).unwrap();
        let s = FactorMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(rgd_step(&z, &s, &RgdOptions::default()).unwrap().sigma, s);
        let out = rgd_solve(&z, &RgdOptions::default()).unwrap();
        assert_eq!((out.status, out.iterations), (SolveStatus::Converged, 0));
    }

    #[test]
    fn edge_descends_monotonically_to_minus_two() {
        let p = edge();
        let mut s = FactorMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut f = 0.0;
        for _ in 0..2000 {
            let st = rgd_step(&p, &s, &RgdOptions::default()).unwrap();
            assert!(st.objective < f && st.step > 0.0);
            f = st.objective;
            s = st.sigma;
        }
        assert!(f < -1.999 && f >= -2.0, "{f}");
    }

    #[test]
    fn triangle_reaches_sdp_value() {
        let (a, b) = (-0.5, 0.25);
        let c = SparseSymMatrix::from_dense(3, &[a, b, b, b, a, b, b, b, a]).unwrap();
        let p = Problem::sphere(c, Some(3)).unwrap();
        let out = rgd_solve(&p, &RgdOptions::default()).unwrap();
        assert!((out.objective + 2.25).abs() < 1e-4, "{}", out.objective);
        let mut prev = f64::INFINITY;
        for r in &out.trace.records {
            assert!(r.objective <= prev);
            prev = r.objective;
        }
    }
}
