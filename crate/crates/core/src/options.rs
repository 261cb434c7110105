use std::time::{Duration, Instant};

/// Knobs shared by every planning method.
#[derive(Debug, Clone)]
pub struct PlannerOptions {
    /// Relative MILP gap for design problems (EF, RMP).
    pub gap: f64,
    /// Wall-clock limit for a whole run.
    pub time_limit: Option<Duration>,
    /// Bound U on the interdiction dual variables; `None` means
    /// `max(1, max_e M_e)`.
    pub dual_bound: Option<f64>,
    /// Largest contingency universe the enumeration-based methods accept.
    pub enumeration_limit: u128,
    /// Largest number of contingency states the extensive form accepts.
    pub ef_state_limit: u128,
    /// Largest number of subsets one brute-force scan may evaluate.
    pub brute_force_limit: u128,
    /// Outer iterations of the cut loops.
    pub max_iterations: usize,
    /// Cuts the cut loops may generate before giving up.
    pub max_cuts: usize,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            gap: 1e-3,
            time_limit: None,
            dual_bound: None,
            enumeration_limit: 1_000_000,
            ef_state_limit: 10_000,
            brute_force_limit: 100_000,
            max_iterations: 10_000,
            max_cuts: 500,
        }
    }
}

impl PlannerOptions {
    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time_limit.map(|d| start + d)
    }
}

/// Time left before `deadline`, or `None` if there is no deadline.
pub(crate) fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|t| t.saturating_duration_since(Instant::now()))
}

/// Tolerance on loss of load below which a contingency counts as survived.
pub fn violation_tol(total_demand: f64) -> f64 {
    1e-6 * total_demand
}

/// Tolerance for comparing two loss-of-load values.
pub fn value_tol(total_demand: f64) -> f64 {
    1e-6 * (1.0 + total_demand)
}
