//! Problem ingestion, experiment configuration and report emission.

pub mod binary;
pub mod gset;
pub mod random;
pub mod so3;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::admm::{default_mu, default_rho, solve, Penalty, SolveOutcome, SolveStatus, SolverOptions};
use crate::certify::{dual_certificate, oracle_sdp, relative_gap, Certificate, DEFAULT_CERT_TOL};
use crate::curvature::{solve_with_curvature, CurvatureOptions};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::rgd::{rgd_solve, RgdOptions};
use crate::trace::{write_atomic, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Plain splitting, `μ = 0`.
    Admm,
    /// Splitting with negative-curvature escapes (sphere only).
    Admm2,
    /// Proximal splitting, `μ > 0`.
    ProxAdmm,
    Rgd,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Admm => "admm",
            Algorithm::Admm2 => "admm2",
            Algorithm::ProxAdmm => "prox-admm",
            Algorithm::Rgd => "rgd",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(Algorithm::Admm),
            "admm2" => Ok(Algorithm::Admm2),
            "prox-admm" => Ok(Algorithm::ProxAdmm),
            "rgd" => Ok(Algorithm::Rgd),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?} (expected admm, admm2, prox-admm or rgd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSource {
    Gset(PathBuf),
    Binary(PathBuf),
    So3 { q: usize, s: f64, seed: u64 },
}

impl ProblemSource {
    /// `.bin` files are binary CSR problems, anything else is read as Gset text.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        if path.extension().is_some_and(|e| e == "bin") {
            ProblemSource::Binary(path)
        } else {
            ProblemSource::Gset(path)
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSource::Gset(p) | ProblemSource::Binary(p) => p.display().to_string(),
            ProblemSource::So3 { q, s, seed } => format!("so3(q={q},s={s},seed={seed})"),
        }
    }
}

pub struct LoadedProblem {
    pub problem: Problem,
    pub name: String,
    pub self_loops_dropped: usize,
}

/// Reads or generates the cost and wraps it with rank `rank` (default rank when `None`).
pub fn load_problem(source: &ProblemSource, rank: Option<usize>) -> Result<LoadedProblem> {
    let name = source.label();
    match source {
        ProblemSource::Gset(path) => {
            let inst = gset::read_gset(path)?;
            let cost = inst.graph.maxcut_cost()?;
            Ok(LoadedProblem {
                problem: Problem::sphere(cost, rank)?,
                name,
                self_loops_dropped: inst.self_loops_dropped(),
            })
        }
        ProblemSource::Binary(path) => {
            let (cost, d) = binary::read_problem(path)?;
            Ok(LoadedProblem { problem: Problem::new(cost, d, rank)?, name, self_loops_dropped: 0 })
        }
        ProblemSource::So3 { q, s, seed } => {
            let inst = so3::generate_so3(*q, *s, *seed)?;
            Ok(LoadedProblem { problem: inst.problem(rank)?, name, self_loops_dropped: 0 })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    /// Kept as text so that unknown names surface as a run failure.
    pub alg: String,
    pub rank: Option<usize>,
    pub rho: Penalty,
    /// Only meaningful for `prox-admm`; `None` picks the mode matching `rho`.
    pub mu: Option<Penalty>,
    /// Only meaningful for `admm2`.
    pub eps: Option<f64>,
    pub tol_primal: f64,
    pub tol_obj: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub check_invariants: bool,
    pub trace_every: usize,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub budget_seconds: Option<f64>,
    /// Compare against a certified reference solve (`n ≤ 500`).
    pub oracle: bool,
    pub wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            source: ProblemSource::Gset(PathBuf::new()),
            alg: "admm".into(),
            rank: None,
            rho: Penalty::Practice,
            mu: None,
            eps: None,
            tol_primal: s.tol_primal,
            tol_obj: s.tol_obj,
            max_iter: s.max_iter,
            seed: 0,
            check_invariants: false,
            trace_every: 1,
            trace: None,
            summary: None,
            budget_seconds: None,
            oracle: false,
            wall_clock: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub problem: String,
    pub alg: String,
    pub n: usize,
    pub r: usize,
    pub rho: f64,
    pub mu: f64,
    pub final_objective: f64,
    /// Relative gap proven by the dual certificate.
    pub gap: f64,
    pub certified: bool,
    pub iterations: usize,
    pub seconds: f64,
    pub seed: u64,
    pub status: String,
    pub relative_gap: Option<f64>,
    pub reference_value: Option<f64>,
    pub certificate: Certificate,
    pub self_loops_dropped: usize,
    pub invariant_warnings: usize,
}

pub struct Report {
    pub summary: Summary,
    pub status: SolveStatus,
    pub trace: Trace,
}

impl ExperimentConfig {
    fn solver_options(&self, alg: Algorithm) -> SolverOptions {
        let mu = match alg {
            Algorithm::ProxAdmm => self.mu.unwrap_or(match self.rho {
                Penalty::Theory => Penalty::Theory,
                _ => Penalty::Practice,
            }),
            _ => Penalty::Value(0.0),
        };
        SolverOptions {
            rho: self.rho,
            mu,
            max_iter: self.max_iter,
            tol_primal: self.tol_primal,
            tol_obj: self.tol_obj,
            seed: self.seed,
            check_invariants: self.check_invariants,
            trace_every: self.trace_every,
            wall_clock: self.wall_clock,
            time_limit: self.budget_seconds,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<Algorithm> {
        let alg: Algorithm = self.alg.parse()?;
        if alg != Algorithm::Admm2 && self.eps.is_some() {
            return Err(Error::InvalidParameter("eps applies only to admm2".into()));
        }
        if alg != Algorithm::ProxAdmm {
            if let Some(Penalty::Value(v)) = self.mu {
                if v != 0.0 {
                    return Err(Error::InvalidParameter("mu > 0 applies only to prox-admm".into()));
                }
            } else if self.mu.is_some() {
                return Err(Error::InvalidParameter("mu applies only to prox-admm".into()));
            }
        }
        Ok(alg)
    }
}

/// Runs the configured experiment without touching the filesystem beyond input.
pub fn execute(config: &ExperimentConfig) -> Result<Report> {
    let alg = config.validate()?;
    let loaded = load_problem(&config.source, config.rank)?;
    let problem = &loaded.problem;
    let opts = config.solver_options(alg);

    let norms = problem.norms();
    let (rho, mu) = match alg {
        Algorithm::Rgd => (0.0, 0.0),
        _ => {
            let rho = default_rho(norms, opts.rho, opts.alpha, opts.beta)?;
            (rho, default_mu(norms, rho, opts.mu)?)
        }
    };
    if alg == Algorithm::ProxAdmm && !(mu - norms.two * norms.two / rho > 0.0) {
        log::warn!(
            "mu - |C|^2/rho = {:e} is not positive; the proximal descent guarantee does not apply",
            mu - norms.two * norms.two / rho
        );
    }

    let (sigma, objective, status, trace, iterations, seconds, warnings) = match alg {
        Algorithm::Admm | Algorithm::ProxAdmm | Algorithm::Admm2 => {
            let out: SolveOutcome = if alg == Algorithm::Admm2 {
                let curv = CurvatureOptions { eps: config.eps.unwrap_or(1e-2), ..Default::default() };
                solve_with_curvature(problem, &opts, &curv)?
            } else {
                solve(problem, &opts)?
            };
            (
                out.state.sigma_tilde().clone(),
                out.state.objective(),
                out.status,
                out.trace,
                out.iterations,
                out.seconds,
                out.warnings,
            )
        }
        Algorithm::Rgd => {
            let ro = RgdOptions {
                max_iter: config.max_iter,
                seed: config.seed,
                trace_every: config.trace_every,
                wall_clock: config.wall_clock,
                time_limit: config.budget_seconds,
                ..Default::default()
            };
            let out = rgd_solve(problem, &ro)?;
            (out.sigma, out.objective, out.status, out.trace, out.iterations, out.seconds, 0)
        }
    };

    let certificate = dual_certificate(problem, &sigma, DEFAULT_CERT_TOL)?;
    let (reference_value, rel) = if config.oracle {
        let o = oracle_sdp(problem.cost(), problem.manifold().d, 5, config.seed)?;
        if !o.certified() {
            log::warn!("reference solve did not certify; relative gap is against an uncertified value");
        }
        (Some(o.value), Some(relative_gap(objective, o.value)?))
    } else {
        (None, None)
    };

    let summary = Summary {
        problem: loaded.name.clone(),
        alg: alg.as_str().into(),
        n: problem.n(),
        r: problem.rank(),
        rho,
        mu,
        final_objective: objective,
        gap: certificate.relative_gap(),
        certified: certificate.certified,
        iterations,
        seconds,
        seed: config.seed,
        status: status.as_str().into(),
        relative_gap: rel,
        reference_value,
        certificate,
        self_loops_dropped: loaded.self_loops_dropped,
        invariant_warnings: warnings,
    };
    Ok(Report { summary, status, trace })
}

/// Writes a trace as JSON lines for `.jsonl`/`.json` paths and CSV otherwise.
pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e == "jsonl" || e == "json") {
        trace.write_jsonl(&mut buf)?;
    } else {
        trace.write_csv(&mut buf)?;
    }
    write_atomic(path, &buf)
}

/// Exit code for a finished run: `0` converged, `2` iteration or time budget
/// exhausted (or line search stalled), `3` assumption violated.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged | SolveStatus::EpsConvex => 0,
        SolveStatus::MaxIter | SolveStatus::Stalled => 2,
        SolveStatus::AssumptionViolated => 3,
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<i32> {
    let report = execute(config)?;
    if let Some(path) = &config.trace {
        write_trace(path, &report.trace)?;
    }
    let json = serde_json::to_string_pretty(&report.summary)?;
    match &config.summary {
        Some(path) => write_atomic(path, format!("{json}\n").as_bytes())?,
        None => println!("{json}"),
    }
    Ok(exit_code(report.status))
}

/// Executes `config`, writes the requested files and returns the process exit code.
pub fn run(config: &ExperimentConfig) -> i32 {
    match run_inner(config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
    }

    #[test]
    fn algorithm_names() {
        for a in [Algorithm::Admm, Algorithm::Admm2, Algorithm::ProxAdmm, Algorithm::Rgd] {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("sdpt3".parse::<Algorithm>().is_err());
    }

    #[test]
    fn unknown_algorithm_exits_3() {
        let cfg = ExperimentConfig {
            source: ProblemSource::from_path(data("triangle.txt")),
            alg: "nope".into(),
            ..Default::default()
        };
        assert_eq!(run(&cfg), 3);
    }

    #[test]
    fn triangle_with_oracle_reference() {
        let cfg = ExperimentConfig {
            source: ProblemSource::from_path(data("triangle.txt")),
            oracle: true,
            ..Default::default()
        };
        let rep = execute(&cfg).unwrap();
        assert!(rep.summary.relative_gap.unwrap() <= 1e-4);
        assert!(rep.summary.certified);
        assert_eq!(exit_code(rep.status), 0);
    }

    #[test]
    fn inconsistent_options_rejected() {
        let base = ExperimentConfig { source: ProblemSource::from_path(data("edge.txt")), ..Default::default() };
        let bad_eps = ExperimentConfig { eps: Some(0.1), ..base.clone() };
        assert!(bad_eps.validate().is_err());
        let bad_mu = ExperimentConfig { mu: Some(Penalty::Value(1.0)), ..base.clone() };
        assert!(bad_mu.validate().is_err());
        let ok = ExperimentConfig { alg: "prox-admm".into(), mu: Some(Penalty::Value(1.0)), ..base };
        assert_eq!(ok.validate().unwrap(), Algorithm::ProxAdmm);
    }
}
