//! Dual certificates of global optimality and small reference oracles.

use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{solve, Penalty, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{min_eig_estimate, spmm, SparseSymMatrix};
use crate::manifold::{require_on_manifold, FactorMatrix};
use crate::problem::Problem;
use crate::rgd::{rgd_solve_from, RgdOptions};

pub const DEFAULT_CERT_TOL: f64 = 1e-6;
const EIG_REL_TOL: f64 = 1e-8;
const EIG_MAX_MATVECS: usize = 20_000;
const EIG_SEED: u64 = 0xce27;

/// Block-diagonal multipliers `Λ` for a feasible factor, with the slack `S = C − Λ`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub objective: f64,
    /// `⟨Cσ, σ⟩ − Σ tr Λᵢ`.
    #[serde(rename = "gap")]
    pub duality_gap: f64,
    /// `λ_min(C − blkdiag(Λ))`.
    pub slack_min_eig: f64,
    pub certified: bool,
    pub block_count: usize,
    /// Row-major `d×d` blocks, one scalar per row when `d = 1`.
    #[serde(skip)]
    pub lambda: Vec<f64>,
    #[serde(skip)]
    pub block_size: usize,
    /// Largest entry of the skew part of `σᵢ(Cσ)ᵢᵀ`; vanishes at stationary points.
    #[serde(skip)]
    pub skew_residual: f64,
    /// Size `n` of the cost, used by the bound below.
    #[serde(skip)]
    pub n: usize,
}

impl Certificate {
    /// Lower bound `Σ tr Λᵢ + n·min(0, λ_min(S))` on the SDP value.
    pub fn lower_bound(&self) -> f64 {
        self.objective - self.duality_gap + self.n as f64 * self.slack_min_eig.min(0.0)
    }

    /// `(objective − lower_bound) / |objective|`, the gap the certificate proves.
    /// Falls back to the absolute gap when the objective is zero.
    pub fn relative_gap(&self) -> f64 {
        let abs = self.objective - self.lower_bound();
        if self.objective == 0.0 {
            abs
        } else {
            abs / self.objective.abs()
        }
    }
}

/// Builds `Λ` from `σ`, assembles `S = C − Λ` sparsely and tests `S ⪰ 0`
/// up to `tol·‖C‖₂` and the gap up to `tol·(1 + |f|)`.
pub fn dual_certificate(problem: &Problem, sigma: &FactorMatrix, tol: f64) -> Result<Certificate> {
    let spec = problem.manifold();
    require_on_manifold(spec, sigma)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("certificate tolerance must be positive, got {tol}")));
    }
    let (d, r) = (spec.d, spec.r);
    let cs = spmm(problem.cost(), sigma)?;
    let objective = cs.dot(sigma);
    let mut lambda = vec![0.0; spec.q * d * d];
    let mut skew: f64 = 0.0;
    let mut trace_sum = 0.0;
    for b in 0..spec.q {
        let s = sigma.block(b, d);
        let c = cs.block(b, d);
        let out = &mut lambda[b * d * d..(b + 1) * d * d];
        for a in 0..d {
            for e in 0..d {
                let m_ae: f64 = (0..r).map(|k| s[a * r + k] * c[e * r + k]).sum();
                let m_ea: f64 = (0..r).map(|k| s[e * r + k] * c[a * r + k]).sum();
                out[a * d + e] = 0.5 * (m_ae + m_ea);
                skew = skew.max(0.5 * (m_ae - m_ea).abs());
            }
            trace_sum += out[a * d + a];
        }
    }
    let slack = problem.cost().minus_block_diagonal(&lambda, d)?;
    let slack_min_eig = slack_min_eig(&slack)?;
    let duality_gap = objective - trace_sum;
    let norms = problem.norms();
    let certified = slack_min_eig >= -tol * norms.two && duality_gap <= tol * (1.0 + objective.abs());
    Ok(Certificate {
        objective,
        duality_gap,
        slack_min_eig,
        certified,
        block_count: spec.q,
        lambda,
        block_size: d,
        skew_residual: skew,
        n: spec.n(),
    })
}

fn slack_min_eig(s: &SparseSymMatrix) -> Result<f64> {
    if s.nnz() == 0 {
        return Ok(0.0);
    }
    match min_eig_estimate(s, EIG_REL_TOL, EIG_MAX_MATVECS, EIG_SEED) {
        Ok((v, _)) => Ok(v),
        Err(Error::NotConverged { estimate, residual, .. }) => {
            log::warn!("slack eigenvalue not converged (residual {residual:e}); using a shifted estimate");
            Ok(estimate - residual)
        }
        Err(e) => Err(e),
    }
}

/// `|(f − f_ref) / f_ref|`.
pub fn relative_gap(objective: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(((objective - reference) / reference).abs())
}

pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Exact max-cut by Gray-code enumeration of the `2ⁿ⁻¹` partitions with vertex `n−1` fixed.
pub fn brute_force_maxcut(graph: &Graph) -> Result<(f64, Vec<bool>)> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge { n, max: BRUTE_FORCE_MAX_N });
    }
    if n <= 1 {
        return Ok((0.0, vec![false; n]));
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, w) in graph.edges() {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    let mut side = vec![false; n];
    let mut cut = 0.0;
    let mut best = (0.0, 0u64);
    let mut code = 0u64;
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        let delta: f64 = adj[v].iter().map(|&(u, w)| if side[u] == side[v] { w } else { -w }).sum();
        side[v] = !side[v];
        code ^= 1 << v;
        cut += delta;
        if cut > best.0 {
            best = (cut, code);
        }
    }
    let assignment: Vec<bool> = (0..n).map(|i| i < 64 && (best.1 >> i) & 1 == 1).collect();
    Ok((graph.cut_value(&assignment), assignment))
}

pub const ORACLE_MAX_N: usize = 500;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: f64,
    pub sigma: FactorMatrix,
    pub certificate: Certificate,
    pub seed: u64,
}

impl OracleResult {
    pub fn certified(&self) -> bool {
        self.certificate.certified
    }
}

/// Oracle rank `min(n, ⌈√(2n)⌉ + 2)`, at least `d + 1` for blocks.
pub fn oracle_rank(n: usize, d: usize) -> usize {
    let r = ((2.0 * n as f64).sqrt().ceil() as usize + 2).min(n);
    if d > 1 {
        r.max(d + 1)
    } else {
        r.max(1)
    }
}

/// Reference SDP value from `restarts` seeded ADMM solves, each certified
/// (and polished by RGD when ADMM stops short of convergence). Keeps the best certified run (lowest seed on ties), or
/// the best uncertified run when none certifies.
pub fn oracle_sdp(cost: &SparseSymMatrix, d: usize, restarts: usize, seed: u64) -> Result<OracleResult> {
    let n = cost.n();
    if n > ORACLE_MAX_N {
        return Err(Error::TooLarge { n, max: ORACLE_MAX_N });
    }
    let problem = Problem::new(cost.clone(), d, Some(oracle_rank(n, d)))?;
    if problem.norms().two == 0.0 {
        let sigma = crate::manifold::random_point(problem.manifold(), seed)?;
        let certificate = dual_certificate(&problem, &sigma, DEFAULT_CERT_TOL)?;
        return Ok(OracleResult { value: certificate.objective, sigma, certificate, seed });
    }
    let runs: Vec<Result<OracleResult>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|i| oracle_run(&problem, seed.wrapping_add(i)))
        .collect();
    let mut best: Option<OracleResult> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => (run.certified(), -run.value) > (b.certified(), -b.value),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn oracle_run(problem: &Problem, seed: u64) -> Result<OracleResult> {
    let mu = if problem.manifold().is_sphere() { Penalty::Value(0.0) } else { Penalty::Practice };
    let opts = SolverOptions { rho: Penalty::Practice, mu, max_iter: 5_000, seed, wall_clock: false, ..Default::default() };
    let admm = solve(problem, &opts)?;
    let mut sigma = admm.state.sigma_tilde().clone();
    if admm.status != SolveStatus::Converged {
        let polish = RgdOptions { grad_tol: 1e-10, max_iter: 2_000, seed, wall_clock: false, ..Default::default() };
        let rgd = rgd_solve_from(problem, &polish, sigma.clone())?;
        if rgd.objective <= admm.state.objective() {
            sigma = rgd.sigma;
        }
    }
    let certificate = dual_certificate(problem, &sigma, DEFAULT_CERT_TOL)?;
    Ok(OracleResult { value: certificate.objective, sigma, certificate, seed })
}
