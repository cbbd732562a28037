use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bm_admm::io::{binary, run, so3, ExperimentConfig, ProblemSource};
use bm_admm::Penalty;

#[derive(Parser)]
#[command(name = "bmadmm", version, about = "Low-rank ADMM solver for diagonally constrained SDPs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Theory,
    Practice,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a Gset (.txt) or binary (.bin) problem.
    Solve {
        #[arg(long)]
        input: PathBuf,
        /// admm, admm2, prox-admm or rgd.
        #[arg(long, default_value = "admm")]
        alg: String,
        #[arg(long, value_enum, default_value = "practice")]
        rho_mode: Mode,
        /// Explicit penalty, overrides --rho-mode.
        #[arg(long)]
        rho: Option<f64>,
        /// Proximal weight for prox-admm; defaults to the --rho-mode choice.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Factor rank, or `auto` for ⌈√(2n)⌉.
        #[arg(long, default_value = "auto")]
        r: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol_primal: Option<f64>,
        #[arg(long)]
        tol_obj: Option<f64>,
        #[arg(long)]
        budget_seconds: Option<f64>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        trace_every: usize,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        check_invariants: bool,
        /// Report the relative gap against a certified reference solve.
        #[arg(long)]
        oracle: bool,
        /// Write zero in the trace `seconds` column.
        #[arg(long)]
        no_wall_clock: bool,
    },
    /// Generate a random SO(3) synchronization cost in the binary format.
    GenSo3 {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(3);
        }
        Err(e) => e.exit(),
    };
    let code = match cli.cmd {
        Cmd::Solve {
            input,
            alg,
            rho_mode,
            rho,
            mu,
            eps,
            r,
            seed,
            max_iter,
            tol_primal,
            tol_obj,
            budget_seconds,
            trace,
            trace_every,
            summary,
            check_invariants,
            oracle,
            no_wall_clock,
        } => {
            let rank = match r.as_str() {
                "auto" => None,
                s => match s.parse() {
                    Ok(v) => Some(v),
                    Err(_) => {
                        eprintln!("error: --r expects a positive integer or `auto`, got {s:?}");
                        return ExitCode::from(3);
                    }
                },
            };
            let mode = match rho_mode {
                Mode::Theory => Penalty::Theory,
                Mode::Practice => Penalty::Practice,
            };
            let d = ExperimentConfig::default();
            let cfg = ExperimentConfig {
                source: ProblemSource::from_path(input),
                alg,
                rank,
                rho: rho.map_or(mode, Penalty::Value),
                mu: mu.map(Penalty::Value),
                eps,
                tol_primal: tol_primal.unwrap_or(d.tol_primal),
                tol_obj: tol_obj.unwrap_or(d.tol_obj),
                max_iter: max_iter.unwrap_or(d.max_iter),
                seed,
                check_invariants,
                trace_every,
                trace,
                summary,
                budget_seconds,
                oracle,
                wall_clock: !no_wall_clock,
            };
            run(&cfg)
        }
        Cmd::GenSo3 { q, s, seed, out } => match gen_so3(q, s, seed, &out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                3
            }
        },
    };
    ExitCode::from(code as u8)
}

fn gen_so3(q: usize, s: f64, seed: u64, out: &std::path::Path) -> bm_admm::Result<()> {
    let inst = so3::generate_so3(q, s, seed)?;
    binary::write_problem(out, &inst.cost, so3::SO3_BLOCK)?;
    let norms = bm_admm::CostNorms::compute(&inst.cost)?;
    println!(
        "n={} nnz={} populated_pairs={} norm2={:.6}",
        inst.cost.n(),
        inst.cost.nnz(),
        inst.populated_pairs,
        norms.two
    );
    Ok(())
}
