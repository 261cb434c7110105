//! Cut loop driven by the interdiction oracle: after each master solve the
//! budgets 1..=k are screened in order and the first violated one yields a
//! single cut before the master is solved again.

use std::collections::HashSet;
use std::time::Instant;

use crate::benders::{solve_master, time_up, CutPool, MasterStep};
use crate::dcopf_subproblem::cut_from_dual;
use crate::error::{CoreError, Result};
use crate::extensive_form::universe_size;
use crate::network_model::{validate_policy, Grid, NkEpsilonPolicy};
use crate::options::{violation_tol, PlannerOptions};
use crate::psip_oracle::worst_case_contingency;
use crate::run::{Method, RunRecord, RunStatus};

pub fn run_ocs(grid: &Grid, policy: &NkEpsilonPolicy, opts: &PlannerOptions) -> Result<RunRecord> {
    validate_policy(policy, grid.num_elements()).into_result()?;
    let start = Instant::now();
    let deadline = opts.deadline(start);
    let d = grid.total_demand();
    let tol = violation_tol(d);
    let mut rec = RunRecord::new(Method::Ocs, universe_size(grid.num_elements(), policy.k));
    rec.times.oracle = Some(0.0);
    rec.times.dsp = Some(0.0);
    let mut pool = CutPool::default();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();

    let status = 'outer: loop {
        if rec.iterations >= opts.max_iterations {
            break RunStatus::IterationLimit;
        }
        if time_up(deadline) {
            break RunStatus::TimeLimit;
        }
        rec.iterations += 1;
        let (build, plan, bound) = match solve_master(grid, &pool, opts, deadline, &mut rec)? {
            MasterStep::Solved(b, p, bound) => (b, p, bound),
            MasterStep::Done(s) => break s,
        };
        if !seen.insert(build.clone()) {
            return Err(CoreError::Stall("master problem returned a plan it had already produced".into()));
        }

        for j in 1..=policy.k {
            rec.oracle_calls += 1;
            let res = match worst_case_contingency(grid, &build, j, opts.dual_bound, deadline) {
                Ok(r) => r,
                Err(CoreError::Solver { status, .. }) if status.is_limit() => break 'outer RunStatus::TimeLimit,
                Err(e) => return Err(e),
            };
            *rec.times.oracle.get_or_insert(0.0) += res.mpsip_secs;
            *rec.times.dsp.get_or_insert(0.0) += res.audit_secs;
            let allowed = policy.eps(j) * d;
            if res.audit.z > allowed + tol {
                let cut = cut_from_dual(grid, &build, &res.contingency, &res.audit, allowed)?;
                if !pool.add(cut) {
                    return Err(CoreError::Stall(format!(
                        "budget {j} produced a cut that was already pooled"
                    )));
                }
                if pool.len() > opts.max_cuts {
                    break 'outer RunStatus::CutLimit;
                }
                continue 'outer;
            }
        }
        rec.plan = Some(*plan);
        rec.best_bound = Some(bound);
        break RunStatus::Optimal;
    };

    rec.status = status;
    rec.duplicate_cuts = pool.duplicates();
    rec.cuts = pool.cuts().to_vec();
    rec.times.total = start.elapsed().as_secs_f64();
    Ok(rec)
}
