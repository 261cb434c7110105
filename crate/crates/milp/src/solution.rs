use std::fmt;
use std::time::Duration;

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NodeLimit,
    IterationLimit,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::TimeLimit => "time_limit",
            Status::NodeLimit => "node_limit",
            Status::IterationLimit => "iteration_limit",
            Status::NumericalFailure => "numerical_failure",
        }
    }

    /// True for the statuses that stop on a resource limit.
    pub fn is_limit(self) -> bool {
        matches!(self, Status::TimeLimit | Status::NodeLimit | Status::IterationLimit)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of an LP or MILP solve. All values are in the model's own
/// objective sense.
///
/// `row_duals[i]` is the derivative of the optimal objective with respect to
/// the right-hand side of row `i`; `reduced_costs[j]` is the derivative with
/// respect to the active bound of variable `j`. Both are only filled for pure
/// LPs solved to optimality.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Values of the structural variables; empty when no point is known.
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Proven bound on the optimum (equal to `objective` for LPs).
    pub best_bound: f64,
    /// Relative gap between `objective` and `best_bound`.
    pub gap: f64,
    pub nodes: usize,
    pub iterations: usize,
}

impl Solution {
    pub fn has_point(&self) -> bool {
        !self.x.is_empty()
    }

    pub(crate) fn empty(status: Status, n_iter: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
            best_bound: f64::NAN,
            gap: f64::INFINITY,
            nodes: 0,
            iterations: n_iter,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LpOptions {
    pub time_limit: Option<Duration>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Stop once `(incumbent - bound) <= rel_gap * |incumbent|`.
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Integrality tolerance.
    pub int_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-3,
            abs_gap: 1e-9,
            time_limit: None,
            node_limit: None,
            int_tol: 1e-6,
        }
    }
}
