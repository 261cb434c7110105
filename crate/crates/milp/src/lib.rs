//! A small dense-model, sparse-kernel LP/MILP solver.
//!
//! Models are built with [`LinearProgram`] and solved with [`solve_lp`]
//! (bounded dual simplex followed by a primal cleanup) or [`solve_milp`]
//! (best-bound branch and bound with warm-started node LPs). Runs are
//! deterministic: the same model always yields the same answer.

mod basis;
mod driver;
mod error;
mod lu;
mod model;
mod simplex;
mod solution;

pub use driver::{solve_lp, solve_milp};
pub use error::ModelError;
pub use model::{Constraint, LinearProgram, ObjectiveSense, RowId, RowSense, VarId, Variable};
pub use solution::{LpOptions, MilpOptions, Solution, Status};

/// Primal feasibility tolerance used by the simplex.
pub const FEASIBILITY_TOL: f64 = simplex::PRIMAL_TOL;
/// Reduced-cost optimality tolerance used by the simplex.
pub const OPTIMALITY_TOL: f64 = simplex::DUAL_TOL;
