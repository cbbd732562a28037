pub mod admm;
pub mod certify;
pub mod curvature;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod problem;
pub mod rgd;
pub mod trace;

pub use admm::{solve, AdmmSolver, Penalty, SolveOutcome, SolveStatus, SolverOptions, SolverState};
pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::{CostNorms, SparseSymMatrix};
pub use manifold::{FactorMatrix, ManifoldSpec};
pub use problem::Problem;
