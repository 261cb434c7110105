//! Restricted master problem with feasibility cuts, separated by sweeping
//! every contingency state.

use std::collections::HashSet;
use std::time::Instant;

use nkeps_milp::{LinearProgram, RowSense, VarId};
use rayon::prelude::*;

use crate::dcopf_subproblem::{cut_from_dual, min_loss_of_load, FeasibilityCut};
use crate::error::{CoreError, Result};
use crate::extensive_form::enumerate_contingencies;
use crate::formulation::{add_block, add_design_vars, solve_design, Block, DesignOutcome};
use crate::network_model::{validate_policy, Contingency, Grid, NkEpsilonPolicy};
use crate::options::{violation_tol, PlannerOptions};
use crate::run::{Method, RunRecord, RunStatus};

/// Pool of distinct cuts, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<FeasibilityCut>,
    duplicates: usize,
}

impl CutPool {
    /// Adds `cut` unless an identical one (coefficients within 1e-9) is
    /// already pooled. Returns whether it was added.
    pub fn add(&mut self, cut: FeasibilityCut) -> bool {
        if self.cuts.iter().any(|c| c.same_as(&cut, 1e-9)) {
            self.duplicates += 1;
            return false;
        }
        self.cuts.push(cut);
        true
    }

    pub fn cuts(&self) -> &[FeasibilityCut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

#[derive(Debug, Clone)]
pub struct RmpLayout {
    pub x: Vec<VarId>,
    pub(crate) block0: Block,
}

/// Least-cost expansion with the no-contingency power flow and every cut.
pub fn build_rmp(grid: &Grid, cuts: &[FeasibilityCut]) -> (LinearProgram, RmpLayout) {
    let mut lp = LinearProgram::minimize();
    let x = add_design_vars(&mut lp, grid);
    let block0 = add_block(&mut lp, grid, &x, &Contingency::empty(), "0", None, grid.system().sigma);
    for (c, cut) in cuts.iter().enumerate() {
        let (coeffs, rhs) = master_row(grid, cut);
        let coeffs = coeffs.into_iter().map(|(u, a)| (x[u], a)).collect();
        lp.add_row(format!("cut{c}"), coeffs, RowSense::Le, rhs);
    }
    (lp, RmpLayout { x, block0 })
}

/// The cut as a master row `Σ a_u x_u <= rhs` over candidate elements.
///
/// Existing elements are folded into the right-hand side. A negative
/// coefficient larger in magnitude than needed to make the row redundant
/// on its own is raised to exactly that amount, which tightens the LP
/// relaxation without changing the 0/1 solutions.
pub fn master_row(grid: &Grid, cut: &FeasibilityCut) -> (Vec<(usize, f64)>, f64) {
    let mut rhs = cut.rhs - cut.constant;
    let mut coeffs = Vec::new();
    for (u, &a) in cut.coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        if grid.is_existing(u) {
            rhs -= a;
        } else {
            coeffs.push((u, a));
        }
    }
    let positive: f64 = coeffs.iter().map(|&(_, a)| a.max(0.0)).sum();
    let floor = rhs - positive;
    if floor < 0.0 {
        for (_, a) in coeffs.iter_mut() {
            if *a < floor {
                *a = floor;
            }
        }
    }
    (coeffs, rhs)
}

pub(crate) enum MasterStep {
    Solved(Vec<bool>, Box<crate::network_model::ExpansionPlan>, f64),
    Done(RunStatus),
}

pub(crate) fn solve_master(
    grid: &Grid,
    pool: &CutPool,
    opts: &PlannerOptions,
    deadline: Option<Instant>,
    rec: &mut RunRecord,
) -> Result<MasterStep> {
    let t = Instant::now();
    let (lp, lay) = build_rmp(grid, pool.cuts());
    let out = solve_design(&lp, &lay.x, &lay.block0, grid, opts.gap, deadline)?;
    *rec.times.rmp.get_or_insert(0.0) += t.elapsed().as_secs_f64();
    Ok(match out {
        DesignOutcome::Optimal { build, plan, best_bound } => MasterStep::Solved(build, Box::new(plan), best_bound),
        DesignOutcome::Infeasible => MasterStep::Done(RunStatus::Infeasible),
        DesignOutcome::Limit => MasterStep::Done(RunStatus::TimeLimit),
    })
}

pub(crate) fn time_up(deadline: Option<Instant>) -> bool {
    matches!(deadline, Some(t) if Instant::now() >= t)
}

pub fn run_benders(grid: &Grid, policy: &NkEpsilonPolicy, opts: &PlannerOptions) -> Result<RunRecord> {
    validate_policy(policy, grid.num_elements()).into_result()?;
    let start = Instant::now();
    let deadline = opts.deadline(start);
    let universe = enumerate_contingencies(grid, policy.k, opts.enumeration_limit)?;
    let d = grid.total_demand();
    let tol = violation_tol(d);
    let mut rec = RunRecord::new(Method::Bd, universe.m() as u128);
    rec.times.dsp = Some(0.0);
    let mut pool = CutPool::default();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();

    let status = loop {
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

        let t = Instant::now();
        let found: Vec<Result<Option<FeasibilityCut>>> = universe
            .states
            .par_iter()
            .map(|cont| {
                let out = min_loss_of_load(grid, &build, cont)?;
                let allowed = policy.eps(cont.size()) * d;
                if out.z > allowed + tol {
                    cut_from_dual(grid, &build, cont, &out, allowed).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect();
        *rec.times.dsp.get_or_insert(0.0) += t.elapsed().as_secs_f64();

        let mut violated = 0;
        let mut added = 0;
        for cut in found {
            if let Some(cut) = cut? {
                violated += 1;
                if pool.add(cut) {
                    added += 1;
                }
            }
        }
        if violated == 0 {
            rec.plan = Some(*plan);
            rec.best_bound = Some(bound);
            break RunStatus::Optimal;
        }
        if added == 0 {
            return Err(CoreError::Stall(format!(
                "{violated} violated states but every cut was already pooled"
            )));
        }
        if pool.len() > opts.max_cuts {
            break RunStatus::CutLimit;
        }
    };

    rec.status = status;
    rec.duplicate_cuts = pool.duplicates();
    rec.cuts = pool.cuts;
    rec.times.total = start.elapsed().as_secs_f64();
    Ok(rec)
}
