//! Least-cost transmission and generation expansion under the N-k-ε
//! survivability criterion: for every set of `j <= k` failed generators or
//! lines, at least `(1 - ε_j)` of total demand must remain servable under DC
//! power flow.
//!
//! Three solution methods share one model:
//!
//! - [`extensive_form::solve_ef`]: a single MILP with one power flow block
//!   per contingency state.
//! - [`benders::run_benders`]: a master problem over the build decisions
//!   with feasibility cuts from every violated state.
//! - [`ocs_driver::run_ocs`]: the same master, with violated states found by
//!   the interdiction oracle in [`psip_oracle`] instead of enumeration.
//!
//! [`verify`] holds the enumeration-based ground truth.

pub mod benders;
pub mod case_io;
pub mod dcopf_subproblem;
pub mod error;
pub mod extensive_form;
mod formulation;
pub mod network_model;
pub mod ocs_driver;
pub mod options;
pub mod psip_oracle;
pub mod run;
pub mod verify;

pub use error::{CoreError, Result};
pub use network_model::{
    Bus, Contingency, ExpansionPlan, Generator, Grid, Line, NkEpsilonPolicy, PowerSystem,
};
pub use options::PlannerOptions;
pub use run::{Method, RunRecord, RunStatus};

/// Runs `method` on a validated grid and policy.
pub fn solve(method: Method, grid: &Grid, policy: &NkEpsilonPolicy, opts: &PlannerOptions) -> Result<RunRecord> {
    match method {
        Method::Ef => extensive_form::solve_ef(grid, policy, opts),
        Method::Bd => benders::run_benders(grid, policy, opts),
        Method::Ocs => ocs_driver::run_ocs(grid, policy, opts),
    }
}
