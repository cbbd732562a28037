//! The ADMM iteration on the Burer–Monteiro factor.
//!
//! One kernel serves both the plain splitting (`mu = 0`, sphere rows) and the
//! proximal variant (`mu > 0`, orthonormal blocks). Each step costs exactly two
//! sparse products: `C·σ` for `γ` and `C·σ̃'` for the `σ` and `y` updates.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spmm, spmm_into, CostNorms};
use crate::manifold::{project_into, random_point, require_on_manifold, FactorMatrix, ManifoldSpec};
use crate::problem::Problem;
use crate::trace::{Trace, TraceRecord};

/// How a penalty-like parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    /// The value the convergence theory asks for.
    Theory,
    /// The value used in practice, `‖C‖₂`.
    Practice,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rho: Penalty,
    /// Proximal weight. `Theory` resolves to `4‖C‖₂²/ρ`.
    pub mu: Penalty,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_obj: f64,
    pub seed: u64,
    pub check_invariants: bool,
    pub trace_every: usize,
    pub alpha: f64,
    pub beta: f64,
    /// When false the `seconds` trace column is pinned to zero so traces are byte-reproducible.
    pub wall_clock: bool,
    /// Wall-clock budget in seconds; exceeding it ends the run with `MaxIter`.
    pub time_limit: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: Penalty::Practice,
            mu: Penalty::Value(0.0),
            max_iter: 100_000,
            tol_primal: 1e-8,
            tol_obj: 1e-10,
            seed: 0,
            check_invariants: false,
            trace_every: 1,
            alpha: 10.0,
            beta: 2.0,
            wall_clock: true,
            time_limit: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_primal > 0.0 && self.tol_obj > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidParameter("trace_every must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// `max(α‖C‖∞, β‖C‖₂)` in theory mode, `‖C‖₂` in practice mode.
pub fn default_rho(norms: &CostNorms, mode: Penalty, alpha: f64, beta: f64) -> Result<f64> {
    let rho = match mode {
        Penalty::Theory => (alpha * norms.inf).max(beta * norms.two),
        Penalty::Practice => norms.two,
        Penalty::Value(v) => v,
    };
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(rho)
}

/// `4‖C‖₂²/ρ` in theory mode, `‖C‖₂` in practice mode.
pub fn default_mu(norms: &CostNorms, rho: f64, mode: Penalty) -> Result<f64> {
    let mu = match mode {
        Penalty::Theory => 4.0 * norms.two * norms.two / rho,
        Penalty::Practice => norms.two,
        Penalty::Value(v) => v,
    };
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be nonnegative and finite, got {mu}")));
    }
    Ok(mu)
}

/// Sufficient-decrease constant `(α²−4α−2)β/(2α²) − 1/β`.
pub fn kappa(alpha: f64, beta: f64) -> f64 {
    (alpha * alpha - 4.0 * alpha - 2.0) * beta / (2.0 * alpha * alpha) - 1.0 / beta
}

/// Lower bound `1 − 4/α − 2/α²` on the row norms of `γ`.
pub fn gamma_floor(alpha: f64) -> f64 {
    1.0 - 4.0 / alpha - 2.0 / (alpha * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    AssumptionViolated,
    /// Curvature-aware run stopped at an approximate second-order point.
    EpsConvex,
    /// Line search could not make progress.
    Stalled,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::MaxIter => "MaxIter",
            SolveStatus::AssumptionViolated => "AssumptionViolated",
            SolveStatus::EpsConvex => "EpsConvex",
            SolveStatus::Stalled => "Stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub step_tilde: f64,
    pub step_sigma: f64,
}

/// Iterate `(σ̃, σ, y)` together with the previous pair and cached quantities.
#[derive(Debug, Clone)]
pub struct SolverState {
    sigma_tilde: FactorMatrix,
    sigma: FactorMatrix,
    y: FactorMatrix,
    c_sigma_tilde: FactorMatrix,
    prev_sigma_tilde: FactorMatrix,
    prev_sigma: FactorMatrix,
    k: usize,
    rho: f64,
    mu: f64,
    norms: CostNorms,
    objective: f64,
    lagrangian: f64,
    min_gamma: f64,
}

impl SolverState {
    /// `σ = σ̃ = start`, `y = C·start`. The start must already lie on `M`.
    pub fn initial(problem: &Problem, start: FactorMatrix, rho: f64, mu: f64) -> Result<Self> {
        require_on_manifold(problem.manifold(), &start)?;
        if !(rho > 0.0) || !(mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("need rho > 0 and mu >= 0, got {rho}, {mu}")));
        }
        let c_st = spmm(problem.cost(), &start)?;
        let objective = c_st.dot(&start);
        Ok(Self {
            y: c_st.clone(),
            c_sigma_tilde: c_st,
            sigma: start.clone(),
            prev_sigma_tilde: start.clone(),
            prev_sigma: start.clone(),
            sigma_tilde: start,
            k: 0,
            rho,
            mu,
            norms: *problem.norms(),
            objective,
            lagrangian: objective,
            min_gamma: f64::NAN,
        })
    }

    pub fn sigma_tilde(&self) -> &FactorMatrix {
        &self.sigma_tilde
    }
    pub fn sigma(&self) -> &FactorMatrix {
        &self.sigma
    }
    pub fn y(&self) -> &FactorMatrix {
        &self.y
    }
    /// Cached `C·σ̃`.
    pub fn c_sigma_tilde(&self) -> &FactorMatrix {
        &self.c_sigma_tilde
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn norms(&self) -> &CostNorms {
        &self.norms
    }
    /// `⟨Cσ̃, σ̃⟩`.
    pub fn objective(&self) -> f64 {
        self.objective
    }
    /// Twin function `G_ρ(σ̃, σ)`.
    pub fn lagrangian(&self) -> f64 {
        self.lagrangian
    }
    /// Smallest block norm of the last `γ` (NaN before the first step).
    pub fn min_gamma(&self) -> f64 {
        self.min_gamma
    }

    pub fn residuals(&self) -> Residuals {
        Residuals {
            primal: self.sigma_tilde.distance(&self.sigma),
            step_tilde: self.sigma_tilde.distance(&self.prev_sigma_tilde),
            step_sigma: self.sigma.distance(&self.prev_sigma),
        }
    }

    /// `‖y − Cσ̃‖_F`.
    pub fn link_residual(&self) -> f64 {
        self.y.distance(&self.c_sigma_tilde)
    }
}

/// `γ = (μσ̃ + ρσ − (y + Cσ)) / (ρ + μ)`; reduces to `σ − (y + Cσ)/ρ` at `μ = 0`.
pub fn gamma(problem: &Problem, state: &SolverState, mu: f64) -> Result<FactorMatrix> {
    let c_sigma = spmm(problem.cost(), &state.sigma)?;
    let mut out = FactorMatrix::zeros(c_sigma.rows(), c_sigma.cols());
    gamma_into(state, mu, &c_sigma, &mut out);
    Ok(out)
}

fn gamma_into(state: &SolverState, mu: f64, c_sigma: &FactorMatrix, out: &mut FactorMatrix) {
    let rho = state.rho;
    let inv = 1.0 / (rho + mu);
    let st = state.sigma_tilde.as_slice();
    let s = state.sigma.as_slice();
    let y = state.y.as_slice();
    let cs = c_sigma.as_slice();
    if mu == 0.0 {
        for (i, g) in out.as_mut_slice().iter_mut().enumerate() {
            *g = s[i] - (y[i] + cs[i]) / rho;
        }
    } else {
        for (i, g) in out.as_mut_slice().iter_mut().enumerate() {
            *g = (mu * st[i] + rho * s[i] - (y[i] + cs[i])) * inv;
        }
    }
}

/// `⟨Cσ̃, σ̃⟩ + (ρ/2)‖σ̃ − σ‖²_F`, which is the augmented Lagrangian at `y = Cσ̃`.
pub fn twin_value(problem: &Problem, sigma_tilde: &FactorMatrix, sigma: &FactorMatrix, rho: f64) -> Result<f64> {
    require_on_manifold(problem.manifold(), sigma_tilde)?;
    if sigma.rows() != sigma_tilde.rows() || sigma.cols() != sigma_tilde.cols() {
        return Err(Error::DimensionMismatch {
            context: "sigma vs sigma_tilde",
            expected: sigma_tilde.rows() * sigma_tilde.cols(),
            found: sigma.rows() * sigma.cols(),
        });
    }
    let c_st = spmm(problem.cost(), sigma_tilde)?;
    let diff = sigma_tilde.distance(sigma);
    Ok(c_st.dot(sigma_tilde) + 0.5 * rho * diff * diff)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Iteration index after the step.
    pub k: usize,
    pub objective: f64,
    pub lagrangian: f64,
    /// `G_ρ` before minus `G_ρ` after.
    pub decrease: f64,
    pub primal_res: f64,
    pub step_tilde: f64,
    pub step_sigma: f64,
    pub min_gamma: f64,
    pub link_residual: f64,
}

/// Which invariant checks abort rather than log.
#[derive(Debug, Clone, Copy)]
struct Hypotheses {
    /// ρ meets the `max(α‖C‖∞, β‖C‖₂)` threshold with `μ = 0` on sphere rows.
    descent: bool,
    kappa: f64,
    /// `μ − ‖C‖₂²/ρ` when positive.
    prox_margin: Option<f64>,
}

pub struct AdmmSolver<'p> {
    problem: &'p Problem,
    opts: SolverOptions,
    state: SolverState,
    hyp: Hypotheses,
    c_sigma: FactorMatrix,
    gamma: FactorMatrix,
    warnings: usize,
}

impl<'p> AdmmSolver<'p> {
    /// Starts from a seeded random point of `M`.
    pub fn new(problem: &'p Problem, opts: SolverOptions) -> Result<Self> {
        let start = random_point(problem.manifold(), opts.seed)?;
        Self::with_start(problem, opts, start)
    }

    /// Warm start. `start` is projected onto `M`; `y` is always reset to `C·σ̃⁰`.
    pub fn with_start(problem: &'p Problem, opts: SolverOptions, start: FactorMatrix) -> Result<Self> {
        opts.validate()?;
        let norms = *problem.norms();
        let rho = default_rho(&norms, opts.rho, opts.alpha, opts.beta)?;
        let mu = default_mu(&norms, rho, opts.mu)?;
        let spec = problem.manifold();
        let mut projected = FactorMatrix::zeros(spec.n(), spec.r);
        crate::manifold::check_shape(spec, &start)?;
        project_into(spec, &start, &mut projected)?;
        let state = SolverState::initial(problem, projected, rho, mu)?;
        let threshold = (opts.alpha * norms.inf).max(opts.beta * norms.two);
        let kap = kappa(opts.alpha, opts.beta);
        let hyp = Hypotheses {
            descent: spec.is_sphere() && mu == 0.0 && rho >= threshold * (1.0 - 1e-12) && kap > 0.0,
            kappa: kap,
            prox_margin: Some(mu - norms.two * norms.two / rho).filter(|m| mu > 0.0 && *m > 0.0),
        };
        let (n, r) = (spec.n(), spec.r);
        Ok(Self {
            problem,
            opts,
            state,
            hyp,
            c_sigma: FactorMatrix::zeros(n, r),
            gamma: FactorMatrix::zeros(n, r),
            warnings: 0,
        })
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }
    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }
    pub fn state(&self) -> &SolverState {
        &self.state
    }
    pub fn into_state(self) -> SolverState {
        self.state
    }
    pub fn rho(&self) -> f64 {
        self.state.rho
    }
    pub fn mu(&self) -> f64 {
        self.state.mu
    }
    /// Invariant violations that were logged instead of aborting.
    pub fn warnings(&self) -> usize {
        self.warnings
    }

    /// Restarts the splitting at `σ = σ̃ = point`, `y = C·point`, keeping `k`.
    pub fn reset_to(&mut self, point: FactorMatrix) -> Result<()> {
        let k = self.state.k;
        let mut fresh = SolverState::initial(self.problem, point, self.state.rho, self.state.mu)?;
        fresh.k = k;
        self.state = fresh;
        Ok(())
    }

    /// Puts back an earlier state, labelled with iteration `k`.
    pub(crate) fn restore(&mut self, mut state: SolverState, k: usize) {
        state.k = k;
        self.state = state;
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let spec: &ManifoldSpec = self.problem.manifold();
        let c = self.problem.cost();
        let k = self.state.k;
        let (rho, mu) = (self.state.rho, self.state.mu);
        let g_old = self.state.lagrangian;

        spmm_into(c, &self.state.sigma, &mut self.c_sigma)?;
        gamma_into(&self.state, mu, &self.c_sigma, &mut self.gamma);
        let min_gamma = self.gamma.min_block_norm(spec.d);

        let st = &mut self.state;
        std::mem::swap(&mut st.prev_sigma_tilde, &mut st.sigma_tilde);
        std::mem::swap(&mut st.prev_sigma, &mut st.sigma);
        if let Err(e) = project_into(spec, &self.gamma, &mut st.sigma_tilde) {
            std::mem::swap(&mut st.prev_sigma_tilde, &mut st.sigma_tilde);
            std::mem::swap(&mut st.prev_sigma, &mut st.sigma);
            return Err(match e {
                Error::ZeroRow { row } => Error::AssumptionViolated { block: row, iteration: k },
                Error::DegenerateProjection { block, .. } => Error::AssumptionViolated { block, iteration: k },
                other => other,
            });
        }
        spmm_into(c, &st.sigma_tilde, &mut st.c_sigma_tilde)?;
        {
            let stn = st.sigma_tilde.as_slice();
            let cst = st.c_sigma_tilde.as_slice();
            let s = st.sigma.as_mut_slice();
            let y = st.y.as_mut_slice();
            for i in 0..s.len() {
                s[i] = stn[i] + (y[i] - cst[i]) / rho;
                y[i] += rho * (stn[i] - s[i]);
            }
        }
        st.k = k + 1;
        st.min_gamma = min_gamma;
        st.objective = st.c_sigma_tilde.dot(&st.sigma_tilde);
        let res = st.residuals();
        st.lagrangian = st.objective + 0.5 * rho * res.primal * res.primal;

        let report = StepReport {
            k: st.k,
            objective: st.objective,
            lagrangian: st.lagrangian,
            decrease: g_old - st.lagrangian,
            primal_res: res.primal,
            step_tilde: res.step_tilde,
            step_sigma: res.step_sigma,
            min_gamma,
            link_residual: st.link_residual(),
        };
        if !(report.lagrangian.is_finite() && st.sigma.is_finite()) {
            return Err(Error::InvariantViolated { iteration: k, detail: "non-finite iterate".into() });
        }
        if self.opts.check_invariants {
            self.check(k, &report)?;
        }
        Ok(report)
    }

    fn check(&mut self, k: usize, rep: &StepReport) -> Result<()> {
        let norms = self.state.norms;
        let n = self.problem.n() as f64;
        let rho = self.state.rho;

        let link_tol = 1e-10 * norms.two * n.sqrt();
        if rep.link_residual > link_tol {
            return Err(Error::InvariantViolated {
                iteration: k + 1,
                detail: format!("|y - C sigma_tilde| = {:e} exceeds {:e}", rep.link_residual, link_tol),
            });
        }
        let floor = -n * norms.inf;
        if rep.lagrangian < floor - 1e-9 * (1.0 + rep.lagrangian.abs()) {
            return Err(Error::InvariantViolated {
                iteration: k + 1,
                detail: format!("G = {} below floor {}", rep.lagrangian, floor),
            });
        }
        if k < 2 {
            return Ok(());
        }

        let mut failures: Vec<String> = Vec::new();
        let mut strict = false;
        if self.problem.manifold().is_sphere() && self.state.mu == 0.0 && norms.inf > 0.0 {
            let bound = gamma_floor(rho / norms.inf);
            if bound > 0.0 && rep.min_gamma < bound - 1e-9 {
                failures.push(format!("min |gamma_i| = {} below {}", rep.min_gamma, bound));
                strict |= self.hyp.descent;
            }
        }
        let slack = 1e-9 * (1.0 + rep.lagrangian.abs());
        let quad_sigma = 0.5 * rho * rep.step_sigma * rep.step_sigma;
        if self.hyp.descent {
            if rep.decrease < -slack {
                failures.push(format!("G increased by {:e}", -rep.decrease));
                strict = true;
            }
            let want = self.hyp.kappa * norms.two * rep.step_tilde * rep.step_tilde + quad_sigma;
            if rep.decrease < want - 1e-9 {
                failures.push(format!("decrease {:e} below sufficient-decrease bound {:e}", rep.decrease, want));
                strict = true;
            }
        } else if self.state.mu == 0.0 && rep.decrease < -slack {
            failures.push(format!("G increased by {:e}", -rep.decrease));
        }
        if let Some(margin) = self.hyp.prox_margin {
            let want = margin * rep.step_tilde * rep.step_tilde + quad_sigma;
            if rep.decrease < want - 1e-9 {
                failures.push(format!("decrease {:e} below proximal bound {:e}", rep.decrease, want));
                strict = true;
            }
        }
        if failures.is_empty() {
            return Ok(());
        }
        let detail = failures.join("; ");
        if strict {
            Err(Error::InvariantViolated { iteration: k + 1, detail })
        } else {
            log::debug!("iteration {}: {}", k + 1, detail);
            self.warnings += 1;
            Ok(())
        }
    }
}

pub struct SolveOutcome {
    pub state: SolverState,
    pub trace: Trace,
    pub status: SolveStatus,
    pub iterations: usize,
    pub seconds: f64,
    pub rho: f64,
    pub mu: f64,
    /// Invariant violations that were logged but did not abort.
    pub warnings: usize,
}

pub(crate) fn record(state: &SolverState, seconds: f64) -> TraceRecord {
    let r = state.residuals();
    TraceRecord {
        k: state.k,
        objective: state.objective,
        lagrangian: state.lagrangian,
        primal_res: r.primal,
        step_tilde: r.step_tilde,
        step_sigma: r.step_sigma,
        min_gamma: if state.min_gamma.is_nan() { 0.0 } else { state.min_gamma },
        seconds,
        curvature: None,
    }
}

pub(crate) fn out_of_time(opts: &SolverOptions, clock: &Instant) -> bool {
    opts.time_limit.is_some_and(|t| clock.elapsed().as_secs_f64() > t)
}

pub(crate) fn converged(opts: &SolverOptions, n: usize, rep: &StepReport) -> bool {
    rep.primal_res <= opts.tol_primal * (n as f64).sqrt()
        && (rep.decrease).abs() <= opts.tol_obj * (1.0 + rep.lagrangian.abs())
}

/// Runs ADMM from a seeded random start until convergence or `max_iter`.
pub fn solve(problem: &Problem, opts: &SolverOptions) -> Result<SolveOutcome> {
    let solver = AdmmSolver::new(problem, opts.clone())?;
    run(solver)
}

/// Runs ADMM from `start` (projected onto `M`).
pub fn solve_from(problem: &Problem, opts: &SolverOptions, start: FactorMatrix) -> Result<SolveOutcome> {
    let solver = AdmmSolver::with_start(problem, opts.clone(), start)?;
    run(solver)
}

fn run(mut solver: AdmmSolver<'_>) -> Result<SolveOutcome> {
    let clock = Instant::now();
    let opts = solver.opts.clone();
    let elapsed = |c: &Instant| if opts.wall_clock { c.elapsed().as_secs_f64() } else { 0.0 };
    let n = solver.problem.n();
    let mut trace = Trace::default();
    let mut status = SolveStatus::MaxIter;
    while solver.state.k < opts.max_iter {
        let rep = match solver.step() {
            Ok(rep) => rep,
            Err(Error::AssumptionViolated { block, iteration }) => {
                log::warn!("degenerate projection in block {block} at iteration {iteration}");
                status = SolveStatus::AssumptionViolated;
                break;
            }
            Err(e) => return Err(e),
        };
        let done = converged(&opts, n, &rep);
        if rep.k % opts.trace_every == 0 || done {
            trace.push(record(&solver.state, elapsed(&clock)));
        }
        if done {
            status = SolveStatus::Converged;
            break;
        }
        if out_of_time(&opts, &clock) {
            break;
        }
    }
    if trace.last().map(|r| r.k) != Some(solver.state.k) {
        trace.push(record(&solver.state, elapsed(&clock)));
    }
    let seconds = elapsed(&clock);
    Ok(SolveOutcome {
        iterations: solver.state.k,
        rho: solver.state.rho,
        mu: solver.state.mu,
        warnings: solver.warnings,
        state: solver.state,
        trace,
        status,
        seconds,
    })
}
