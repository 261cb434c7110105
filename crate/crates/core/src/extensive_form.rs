//! Monolithic MILP with one DC power flow block per contingency state.

use std::time::Instant;

use nkeps_milp::{LinearProgram, VarId};

use crate::error::{CoreError, Result};
use crate::formulation::{add_block, add_design_vars, solve_design, Block, DesignOutcome};
use crate::network_model::{validate_policy, Contingency, Grid, NkEpsilonPolicy};
use crate::options::PlannerOptions;
use crate::run::{Method, RunRecord, RunStatus};

/// C(n, j), saturating at `u128::MAX`.
pub fn binomial(n: usize, j: usize) -> u128 {
    if j > n {
        return 0;
    }
    let j = j.min(n - j);
    let mut c: u128 = 1;
    for i in 0..j {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// m = Σ_{j=1..k} C(n, j).
pub fn universe_size(n: usize, k: usize) -> u128 {
    (1..=k).fold(0u128, |acc, j| acc.saturating_add(binomial(n, j)))
}

/// All size-`j` subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, j: usize) -> Self {
        Self {
            n,
            cur: (0..j).collect(),
            done: j > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let j = self.cur.len();
        let mut i = j;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.n - j + i {
                self.cur[i] += 1;
                for t in i + 1..j {
                    self.cur[t] = self.cur[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// The contingency states with 1..=k failures: by size, then
/// lexicographically by element id.
#[derive(Debug, Clone)]
pub struct ContingencyUniverse {
    pub states: Vec<Contingency>,
}

impl ContingencyUniverse {
    pub fn m(&self) -> usize {
        self.states.len()
    }
}

pub fn enumerate_contingencies(grid: &Grid, k: usize, limit: u128) -> Result<ContingencyUniverse> {
    let n = grid.num_elements();
    let m = universe_size(n, k);
    if m > limit {
        return Err(CoreError::SizeGuard {
            what: format!("contingency enumeration (N = {n}, k = {k})"),
            count: m,
            limit,
        });
    }
    let states = (1..=k.min(n))
        .flat_map(|j| Combinations::new(n, j))
        .map(Contingency::from_positions)
        .collect();
    Ok(ContingencyUniverse { states })
}

#[derive(Debug, Clone)]
pub struct EfLayout {
    pub x: Vec<VarId>,
    pub(crate) block0: Block,
    pub blocks: usize,
}

/// Number of failure states the extensive form would carry, or a size-guard
/// error when it exceeds `limit`.
pub fn ef_size_guard(grid: &Grid, k: usize, limit: u128) -> Result<u128> {
    let n = grid.num_elements();
    let m = universe_size(n, k);
    if m > limit {
        return Err(CoreError::SizeGuard {
            what: format!("extensive form (N = {n}, k = {k})"),
            count: m,
            limit,
        });
    }
    Ok(m)
}

/// Builds the extensive form; refuses when the number of states exceeds
/// `opts.ef_state_limit`.
pub fn build_ef(grid: &Grid, policy: &NkEpsilonPolicy, opts: &PlannerOptions) -> Result<(LinearProgram, EfLayout)> {
    validate_policy(policy, grid.num_elements()).into_result()?;
    ef_size_guard(grid, policy.k, opts.ef_state_limit)?;
    let universe = enumerate_contingencies(grid, policy.k, opts.ef_state_limit)?;
    let d = grid.total_demand();
    let mut lp = LinearProgram::minimize();
    let x = add_design_vars(&mut lp, grid);
    let sigma = grid.system().sigma;
    let block0 = add_block(&mut lp, grid, &x, &Contingency::empty(), "0", Some(0.0), sigma);
    for (s, cont) in universe.states.iter().enumerate() {
        let cap = policy.eps(cont.size()) * d;
        add_block(&mut lp, grid, &x, cont, &format!("s{}", s + 1), Some(cap), 0.0);
    }
    let layout = EfLayout {
        x,
        block0,
        blocks: universe.m() + 1,
    };
    Ok((lp, layout))
}

pub fn solve_ef(grid: &Grid, policy: &NkEpsilonPolicy, opts: &PlannerOptions) -> Result<RunRecord> {
    let start = Instant::now();
    let (lp, layout) = build_ef(grid, policy, opts)?;
    let mut rec = RunRecord::new(Method::Ef, universe_size(grid.num_elements(), policy.k));
    rec.iterations = 1;
    match solve_design(&lp, &layout.x, &layout.block0, grid, opts.gap, opts.deadline(start))? {
        DesignOutcome::Optimal { plan, best_bound, .. } => {
            rec.status = RunStatus::Optimal;
            rec.plan = Some(plan);
            rec.best_bound = Some(best_bound);
        }
        DesignOutcome::Infeasible => rec.status = RunStatus::Infeasible,
        DesignOutcome::Limit => rec.status = RunStatus::TimeLimit,
    }
    rec.times.total = start.elapsed().as_secs_f64();
    Ok(rec)
}
