//! Ground truth by enumeration, and plan compliance checks.

use rayon::prelude::*;

use crate::dcopf_subproblem::min_loss_of_load;
use crate::error::{CoreError, Result};
use crate::extensive_form::{binomial, Combinations};
use crate::network_model::{Contingency, Grid, NkEpsilonPolicy};
use crate::options::{value_tol, violation_tol};
use crate::psip_oracle::worst_case_contingency;

/// Largest loss of load over all size-`j` failure sets, with the
/// lexicographically first set attaining it.
pub fn brute_force_worst(grid: &Grid, build: &[bool], j: usize, limit: u128) -> Result<(f64, Contingency)> {
    let n = grid.num_elements();
    let count = binomial(n, j);
    if count > limit {
        return Err(CoreError::SizeGuard {
            what: format!("brute force over failure sets of size {j} (N = {n})"),
            count,
            limit,
        });
    }
    if j > n {
        return Err(CoreError::Parse(format!("budget {j} exceeds the number of elements {n}")));
    }
    let sets: Vec<Vec<usize>> = Combinations::new(n, j).collect();
    let values: Vec<Result<f64>> = sets
        .par_iter()
        .map(|s| min_loss_of_load(grid, build, &Contingency::from_positions(s.clone())).map(|o| o.z))
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * (1.0 + grid.total_demand());
    let arg = values.iter().position(|v| *v >= best - tie).unwrap_or(0);
    Ok((best, Contingency::from_positions(sets[arg].clone())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Enumerate,
    Oracle,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::Enumerate => "enumerate",
            CheckMode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCheck {
    pub j: usize,
    pub worst_shed: f64,
    pub allowed: f64,
    pub passed: bool,
    pub contingency: Contingency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    pub mode: CheckMode,
    pub checks: Vec<BudgetCheck>,
}

impl ComplianceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&BudgetCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Worst loss of load for each budget `j = 0..=k` compared against `ε_j D`.
///
/// The policy is only checked for shape (length k + 1, k <= N), so that
/// deliberately tightened vectors can be tested.
pub fn check_plan_compliance(
    grid: &Grid,
    policy: &NkEpsilonPolicy,
    build: &[bool],
    mode: CheckMode,
    brute_force_limit: u128,
    dual_bound: Option<f64>,
) -> Result<ComplianceReport> {
    let n = grid.num_elements();
    if policy.epsilon.len() != policy.k + 1 || policy.k > n {
        return Err(CoreError::Parse(format!(
            "policy needs k <= {n} and k + 1 epsilon values (k = {}, {} given)",
            policy.k,
            policy.epsilon.len()
        )));
    }
    let d = grid.total_demand();
    let mut checks = Vec::with_capacity(policy.k + 1);
    for j in 0..=policy.k {
        let (worst, cont) = if j == 0 {
            (min_loss_of_load(grid, build, &Contingency::empty())?.z, Contingency::empty())
        } else {
            match mode {
                CheckMode::Enumerate => brute_force_worst(grid, build, j, brute_force_limit)?,
                CheckMode::Oracle => {
                    let r = worst_case_contingency(grid, build, j, dual_bound, None)?;
                    (r.worst_shed, r.contingency)
                }
            }
        };
        let allowed = policy.eps(j) * d;
        checks.push(BudgetCheck {
            j,
            worst_shed: worst,
            allowed,
            passed: worst <= allowed + violation_tol(d),
            contingency: cont,
        });
    }
    Ok(ComplianceReport { mode, checks })
}

/// True when two loss-of-load values agree to the comparison tolerance.
pub fn values_agree(grid: &Grid, a: f64, b: f64) -> bool {
    (a - b).abs() <= value_tol(grid.total_demand())
}
