//! First and second order geometry of `f(σ) = ⟨C, σσᵀ⟩` on the sphere
//! product, and the curvature-aware ADMM variant that escapes saddles.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::admm::{out_of_time, record, AdmmSolver, SolveOutcome, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::spmm;
use crate::manifold::{
    check_shape, geodesic_step, random_point, require_on_manifold, tangent_project_unchecked, tangent_violation,
    FactorMatrix, ManifoldSpec,
};
use crate::problem::Problem;
use crate::trace::{CurvatureColumns, Trace};

const TANGENT_TOL: f64 = 1e-8;

fn require_sphere(spec: &ManifoldSpec) -> Result<()> {
    if spec.is_sphere() {
        Ok(())
    } else {
        Err(Error::Unsupported("curvature routines are defined for the sphere case (d = 1)".into()))
    }
}

/// `⟨Cσ, σ⟩`.
pub fn objective(problem: &Problem, sigma: &FactorMatrix) -> Result<f64> {
    check_shape(problem.manifold(), sigma)?;
    Ok(spmm(problem.cost(), sigma)?.dot(sigma))
}

/// Row multipliers `λ_i = ⟨(Cσ)_i, σ_i⟩`.
pub(crate) fn row_multipliers(c_sigma: &FactorMatrix, sigma: &FactorMatrix) -> Vec<f64> {
    (0..sigma.rows())
        .map(|i| c_sigma.row(i).iter().zip(sigma.row(i)).map(|(a, b)| a * b).sum())
        .collect()
}

/// `g_i = 2[(Cσ)_i − λ_i σ_i]`.
pub fn riemannian_grad(problem: &Problem, sigma: &FactorMatrix) -> Result<FactorMatrix> {
    let spec = problem.manifold();
    require_sphere(spec)?;
    require_on_manifold(spec, sigma)?;
    let cs = spmm(problem.cost(), sigma)?;
    Ok(grad_from(&cs, sigma))
}

fn grad_from(c_sigma: &FactorMatrix, sigma: &FactorMatrix) -> FactorMatrix {
    let lam = row_multipliers(c_sigma, sigma);
    let mut g = c_sigma.clone();
    for (i, l) in lam.iter().enumerate() {
        for (gk, sk) in g.row_mut(i).iter_mut().zip(sigma.row(i)) {
            *gk = 2.0 * (*gk - l * sk);
        }
    }
    g
}

fn check_tangent(spec: &ManifoldSpec, sigma: &FactorMatrix, u: &FactorMatrix) -> Result<()> {
    let violation = tangent_violation(spec, sigma, u)?;
    if !(violation <= TANGENT_TOL) {
        return Err(Error::NotTangent { violation });
    }
    Ok(())
}

/// `⟨u, Hess f(σ)[u]⟩ = 2⟨u, Cu⟩ − 2 Σ λ_i ‖u_i‖²`.
pub fn hess_quadform(problem: &Problem, sigma: &FactorMatrix, u: &FactorMatrix) -> Result<f64> {
    let spec = problem.manifold();
    require_sphere(spec)?;
    require_on_manifold(spec, sigma)?;
    check_tangent(spec, sigma, u)?;
    let lam = row_multipliers(&spmm(problem.cost(), sigma)?, sigma);
    let cu = spmm(problem.cost(), u)?;
    let weighted: f64 = lam.iter().enumerate().map(|(i, l)| l * u.row(i).iter().map(|x| x * x).sum::<f64>()).sum();
    Ok(2.0 * cu.dot(u) - 2.0 * weighted)
}

/// Riemannian Hessian applied to a tangent vector: `P_T(2Cu) − 2Λu`.
pub fn hess_apply(problem: &Problem, sigma: &FactorMatrix, u: &FactorMatrix) -> Result<FactorMatrix> {
    let spec = problem.manifold();
    require_sphere(spec)?;
    require_on_manifold(spec, sigma)?;
    check_tangent(spec, sigma, u)?;
    let lam = row_multipliers(&spmm(problem.cost(), sigma)?, sigma);
    let mut out = FactorMatrix::zeros(u.rows(), u.cols());
    HessOp { problem, sigma, lam: &lam }.apply(u, &mut out)?;
    Ok(out)
}

struct HessOp<'a> {
    problem: &'a Problem,
    sigma: &'a FactorMatrix,
    lam: &'a [f64],
}

impl HessOp<'_> {
    fn apply(&self, u: &FactorMatrix, out: &mut FactorMatrix) -> Result<()> {
        crate::linalg::spmm_into(self.problem.cost(), u, out)?;
        *out = tangent_project_unchecked(self.problem.manifold(), self.sigma, &out.scaled(2.0));
        for (i, l) in self.lam.iter().enumerate() {
            for (o, x) in out.row_mut(i).iter_mut().zip(u.row(i)) {
                *o -= 2.0 * l * x;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    /// `λ_H < −ε/2`; `u` is an escape direction.
    NegativeCurvature,
    /// `λ_H ≥ −ε/2` after the full probabilistic budget.
    EpsConvex,
    /// Iteration cap hit before the budget needed for either conclusion.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Failure probability of the randomized power method.
    pub delta: f64,
    /// Hard cap on power iterations per probe.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { delta: 1e-3, max_iter: 10_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    /// Rayleigh quotient `⟨u, Hess f(σ)[u]⟩`.
    pub lambda_h: f64,
    /// Unit tangent direction with `⟨u, grad f(σ)⟩ ≤ 0`.
    pub u: FactorMatrix,
    /// `c − ‖(cI − H)u‖`, a lower estimate of `λ_min(Hess f(σ))`.
    pub lambda_min_estimate: f64,
    pub certified_eps_convex: bool,
    pub probe_iterations: usize,
    pub outcome: ProbeOutcome,
}

/// Number of power iterations after which, with probability `1 − δ`, a
/// Rayleigh quotient above `−ε/2` rules out `λ_min < −ε`.
pub fn power_budget(shift: f64, eps: f64, dim: usize, delta: f64) -> usize {
    let eta = eps / (2.0 * (shift + eps));
    let k = ((0.824 * (dim.max(1) as f64).sqrt() / delta).ln() / eta + 0.5).ceil();
    if k.is_finite() && k > 0.0 {
        k as usize
    } else {
        1
    }
}

/// Shifted power method on `cI − Hess f(σ)` restricted to the tangent space,
/// `c = 2‖C‖₂ + 2‖C‖∞`.
pub fn negative_curvature_direction(
    problem: &Problem,
    sigma: &FactorMatrix,
    eps: f64,
    opts: &ProbeOptions,
) -> Result<CurvatureReport> {
    let spec = problem.manifold();
    require_sphere(spec)?;
    require_on_manifold(spec, sigma)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {}", opts.delta)));
    }
    let (n, r) = (spec.n(), spec.r);
    let norms = problem.norms();
    let shift = 2.0 * norms.two + 2.0 * norms.inf;
    let c_sigma = spmm(problem.cost(), sigma)?;
    let grad = grad_from(&c_sigma, sigma);
    let lam = row_multipliers(&c_sigma, sigma);
    let op = HessOp { problem, sigma, lam: &lam };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise: Vec<f64> = (0..n * r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut v = tangent_project_unchecked(spec, sigma, &FactorMatrix::from_vec(n, r, noise)?);
    let nv = v.norm();
    if spec.tangent_dim() == 0 || nv == 0.0 {
        return Ok(CurvatureReport {
            lambda_h: 0.0,
            u: FactorMatrix::zeros(n, r),
            lambda_min_estimate: 0.0,
            certified_eps_convex: true,
            probe_iterations: 0,
            outcome: ProbeOutcome::EpsConvex,
        });
    }
    v = v.scaled(1.0 / nv);

    let budget = power_budget(shift, eps, spec.tangent_dim(), opts.delta);
    let cap = budget.min(opts.max_iter);
    let mut hv = FactorMatrix::zeros(n, r);
    let mut history: Vec<f64> = Vec::new();
    let mut lambda_h;
    let mut av_norm;
    let mut it = 0usize;
    loop {
        op.apply(&v, &mut hv)?;
        lambda_h = hv.dot(&v);
        // A v = c v − H v
        let mut av = FactorMatrix::lin_comb(shift, &v, -1.0, &hv);
        av_norm = av.norm();
        history.push(lambda_h);
        it += 1;
        let stalled = it >= 32 && {
            let old = history[it - 17];
            old - lambda_h <= 1e-3 * lambda_h.abs()
        };
        if (lambda_h < -0.5 * eps && stalled) || it >= cap || av_norm == 0.0 {
            break;
        }
        av = tangent_project_unchecked(spec, sigma, &av);
        let na = av.norm();
        if na == 0.0 {
            break;
        }
        v = av.scaled(1.0 / na);
    }

    let mut u = tangent_project_unchecked(spec, sigma, &v);
    let nu = u.norm();
    u = u.scaled(1.0 / nu);
    if u.dot(&grad) > 0.0 {
        u = u.scaled(-1.0);
    }
    let outcome = if lambda_h < -0.5 * eps {
        ProbeOutcome::NegativeCurvature
    } else if it >= budget || av_norm == 0.0 {
        ProbeOutcome::EpsConvex
    } else {
        ProbeOutcome::Inconclusive
    };
    Ok(CurvatureReport {
        lambda_h,
        u,
        lambda_min_estimate: shift - av_norm,
        certified_eps_convex: outcome == ProbeOutcome::EpsConvex,
        probe_iterations: it,
        outcome,
    })
}

/// Adaptive geodesic step length `t = −2λ_H / (15‖C‖₁)`.
pub fn escape_step_length(lambda_h: f64, one_norm: f64) -> f64 {
    -2.0 * lambda_h / (15.0 * one_norm)
}

/// Guaranteed objective decrease `−2λ_H³ / (675‖C‖₁²)` of the escape step.
pub fn guaranteed_decrease(lambda_h: f64, one_norm: f64) -> f64 {
    -2.0 * lambda_h.powi(3) / (675.0 * one_norm * one_norm)
}

/// Geodesic move along `report.u` with the adaptive step length.
pub fn escape_step(problem: &Problem, sigma: &FactorMatrix, report: &CurvatureReport) -> Result<FactorMatrix> {
    let spec = problem.manifold();
    require_sphere(spec)?;
    require_on_manifold(spec, sigma)?;
    if !(report.lambda_h < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "escape needs negative curvature, got lambda_H = {}",
            report.lambda_h
        )));
    }
    let t = escape_step_length(report.lambda_h, problem.norms().one);
    geodesic_step(spec, sigma, &report.u, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurvatureOptions {
    pub eps: f64,
    /// Lagrangian decrease below which a probe is run. `None` uses `min(κ‖C‖₂, ρ/2)·ε²`.
    pub decrease_threshold: Option<f64>,
    pub probe: ProbeOptions,
    /// ADMM steps to wait after an escape or an inconclusive probe.
    pub probe_cooldown: usize,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self { eps: 1e-2, decrease_threshold: None, probe: ProbeOptions::default(), probe_cooldown: 100 }
    }
}

/// Iteration budget `T₁ + T₂` with `T₁ = max(1, ⌈(f(σ̃⁰) + n‖C‖∞)/(κ_eff ε²)⌉)`
/// and `T₂ = ⌈675‖C‖₁² n / ε²⌉`.
pub fn iteration_budget(f0: f64, n: usize, inf_norm: f64, one_norm: f64, kappa_eff: f64, eps: f64) -> usize {
    let e2 = eps * eps;
    let t1 = ((f0 + n as f64 * inf_norm) / (kappa_eff * e2)).ceil();
    let t1 = if t1.is_finite() { t1.max(1.0) } else { f64::MAX };
    let t2 = (675.0 * one_norm * one_norm * n as f64 / e2).ceil();
    let total = t1 + t2;
    if total >= usize::MAX as f64 {
        usize::MAX
    } else {
        total as usize
    }
}

/// Curvature-aware ADMM from a seeded random start.
pub fn solve_with_curvature(problem: &Problem, opts: &SolverOptions, curv: &CurvatureOptions) -> Result<SolveOutcome> {
    let start = random_point(problem.manifold(), opts.seed)?;
    solve_with_curvature_from(problem, opts, curv, start)
}

pub fn solve_with_curvature_from(
    problem: &Problem,
    opts: &SolverOptions,
    curv: &CurvatureOptions,
    start: FactorMatrix,
) -> Result<SolveOutcome> {
    require_sphere(problem.manifold())?;
    if !(curv.eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", curv.eps)));
    }
    let clock = Instant::now();
    let elapsed = |c: &Instant| if opts.wall_clock { c.elapsed().as_secs_f64() } else { 0.0 };
    let mut solver = AdmmSolver::with_start(problem, opts.clone(), start)?;
    let norms = *problem.norms();
    let n = problem.n();
    let rho = solver.rho();
    let kappa_eff = (crate::admm::kappa(opts.alpha, opts.beta) * norms.two).min(rho / 2.0);
    let kappa_eff = if kappa_eff > 0.0 { kappa_eff } else { rho / 2.0 };
    let threshold = curv.decrease_threshold.unwrap_or(kappa_eff * curv.eps * curv.eps);
    let budget = opts.max_iter.min(iteration_budget(
        solver.state().objective(),
        n,
        norms.inf,
        norms.one,
        kappa_eff,
        curv.eps,
    ));

    let mut trace = Trace::default();
    let mut status = SolveStatus::MaxIter;
    let mut cooldown_until = 0usize;
    let mut probes = 0u64;
    while solver.state().k() < budget {
        let snapshot = solver.state().clone();
        let rep = match solver.step() {
            Ok(r) => r,
            Err(Error::AssumptionViolated { block, iteration }) => {
                log::warn!("degenerate projection in block {block} at iteration {iteration}");
                status = SolveStatus::AssumptionViolated;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut cols = CurvatureColumns { probe_performed: 0, lambda_h: 0.0, escaped: 0 };
        let small = !(rep.decrease > 0.0 && rep.decrease >= threshold);
        let mut finished = false;
        if small && rep.k >= cooldown_until {
            let probe_opts = ProbeOptions { seed: curv.probe.seed.wrapping_add(probes), ..curv.probe.clone() };
            probes += 1;
            let at = snapshot.sigma_tilde();
            let report = negative_curvature_direction(problem, at, curv.eps, &probe_opts)?;
            cols.probe_performed = 1;
            cols.lambda_h = report.lambda_h;
            match report.outcome {
                ProbeOutcome::NegativeCurvature => {
                    let next = escape_step(problem, at, &report)?;
                    if opts.check_invariants {
                        let before = snapshot.objective();
                        let after = objective(problem, &next)?;
                        let want = guaranteed_decrease(report.lambda_h, norms.one);
                        if before - after < want - 1e-9 {
                            return Err(Error::InvariantViolated {
                                iteration: rep.k,
                                detail: format!("escape decrease {:e} below guarantee {:e}", before - after, want),
                            });
                        }
                    }
                    solver.reset_to(next)?;
                    cols.escaped = 1;
                    cooldown_until = rep.k + curv.probe_cooldown;
                }
                ProbeOutcome::EpsConvex => {
                    solver.restore(snapshot, rep.k);
                    status = SolveStatus::EpsConvex;
                    finished = true;
                }
                ProbeOutcome::Inconclusive => {
                    log::info!("curvature probe inconclusive at iteration {}", rep.k);
                    cooldown_until = rep.k + curv.probe_cooldown;
                }
            }
        }
        let k = solver.state().k();
        if k % opts.trace_every == 0 || finished || k >= budget {
            let mut rec = record(solver.state(), elapsed(&clock));
            rec.curvature = Some(cols);
            trace.push(rec);
        }
        if finished || out_of_time(opts, &clock) {
            break;
        }
    }
    let seconds = elapsed(&clock);
    let warnings = solver.warnings();
    let state = solver.into_state();
    if trace.last().map(|r| r.k) != Some(state.k()) {
        let mut rec = record(&state, seconds);
        rec.curvature = Some(CurvatureColumns { probe_performed: 0, lambda_h: 0.0, escaped: 0 });
        trace.push(rec);
    }
    Ok(SolveOutcome {
        iterations: state.k(),
        rho: state.rho(),
        mu: state.mu(),
        warnings,
        state,
        trace,
        status,
        seconds,
    })
}
