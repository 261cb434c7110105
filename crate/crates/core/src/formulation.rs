//! Design variables and DC power flow blocks shared by the extensive form
//! and the restricted master problem.

use std::time::Instant;

use nkeps_milp::{solve_milp, LinearProgram, MilpOptions, RowSense, Solution, Status, VarId};

use crate::error::{CoreError, Result};
use crate::network_model::{Contingency, Dispatch, ExpansionPlan, Grid};
use crate::options::remaining;

/// Variables of one operating state.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub theta: Vec<VarId>,
    pub flow: Vec<VarId>,
    pub output: Vec<VarId>,
}

/// Adds one binary build variable per element, in universe order. Existing
/// elements are fixed to 1 through their bounds.
pub(crate) fn add_design_vars(lp: &mut LinearProgram, grid: &Grid) -> Vec<VarId> {
    (0..grid.num_elements())
        .map(|u| {
            let v = lp.add_binary(format!("x_{}", grid.element_id(u)), grid.invest_cost(u));
            if grid.is_existing(u) {
                lp.set_bounds(v, 1.0, 1.0);
            }
            v
        })
        .collect()
}

/// Adds the DC power flow of one state with the elements of `cont` failed.
///
/// With `shed_cap = Some(c)`, shed variables `0 <= q_i <= D_i` and the row
/// `Σ q_i <= c` are added; otherwise demand must be met exactly.
/// Generation in this state is charged `cost_weight` times marginal cost.
pub(crate) fn add_block(
    lp: &mut LinearProgram,
    grid: &Grid,
    x: &[VarId],
    cont: &Contingency,
    tag: &str,
    shed_cap: Option<f64>,
    cost_weight: f64,
) -> Block {
    let sys = grid.system();
    let th = sys.theta_bound;
    let theta: Vec<VarId> = sys
        .buses
        .iter()
        .map(|b| lp.add_var(format!("theta{tag}_{}", b.id), -th, th, 0.0))
        .collect();

    let mut balance: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); grid.num_buses()];
    let mut flow = Vec::with_capacity(grid.num_lines());
    for (l, line) in sys.lines.iter().enumerate() {
        let u = grid.line_position(l);
        let failed = cont.contains(u);
        let cap = if failed { 0.0 } else { line.capacity };
        let f = lp.add_var(format!("f{tag}_{}", line.id), -cap, cap, 0.0);
        flow.push(f);
        balance[grid.line_to(l)].push((f, 1.0));
        balance[grid.line_from(l)].push((f, -1.0));
        if failed {
            // Flow is zero and |B Δθ| <= 2 B Θ <= M, so the relaxed
            // Kirchhoff pair is redundant.
            continue;
        }
        let (t, h) = (theta[grid.line_from(l)], theta[grid.line_to(l)]);
        let b = line.susceptance;
        if line.existing {
            lp.add_row(
                format!("kvl{tag}_{}", line.id),
                vec![(f, 1.0), (t, -b), (h, b)],
                RowSense::Eq,
                0.0,
            );
        } else {
            let m = grid.big_m(l);
            lp.add_row(
                format!("kh{tag}_{}", line.id),
                vec![(f, 1.0), (t, -b), (h, b), (x[u], m)],
                RowSense::Le,
                m,
            );
            lp.add_row(
                format!("kc{tag}_{}", line.id),
                vec![(f, -1.0), (t, b), (h, -b), (x[u], m)],
                RowSense::Le,
                m,
            );
            lp.add_row(
                format!("fu{tag}_{}", line.id),
                vec![(f, 1.0), (x[u], -line.capacity)],
                RowSense::Le,
                0.0,
            );
            lp.add_row(
                format!("fl{tag}_{}", line.id),
                vec![(f, -1.0), (x[u], -line.capacity)],
                RowSense::Le,
                0.0,
            );
        }
    }

    let mut output = Vec::with_capacity(grid.num_generators());
    for (g, gen) in sys.generators.iter().enumerate() {
        let u = grid.gen_position(g);
        let failed = cont.contains(u);
        let cap = if failed { 0.0 } else { gen.capacity };
        let p = lp.add_var(format!("p{tag}_{}", gen.id), 0.0, cap, cost_weight * gen.marginal_cost);
        output.push(p);
        balance[grid.gen_bus(g)].push((p, 1.0));
        if !failed && !gen.existing {
            lp.add_row(
                format!("pu{tag}_{}", gen.id),
                vec![(p, 1.0), (x[u], -gen.capacity)],
                RowSense::Le,
                0.0,
            );
        }
    }

    if let Some(cap) = shed_cap {
        let mut total = Vec::with_capacity(grid.num_buses());
        for (i, bus) in sys.buses.iter().enumerate() {
            let q = lp.add_var(format!("q{tag}_{}", bus.id), 0.0, bus.demand, 0.0);
            balance[i].push((q, 1.0));
            total.push((q, 1.0));
        }
        lp.add_row(format!("shed{tag}"), total, RowSense::Le, cap);
    }

    for (i, terms) in balance.into_iter().enumerate() {
        let bus = &sys.buses[i];
        lp.add_row(format!("bal{tag}_{}", bus.id), terms, RowSense::Eq, bus.demand);
    }

    Block { theta, flow, output }
}

/// Outcome of a design MILP (extensive form or master problem).
#[derive(Debug, Clone)]
pub(crate) enum DesignOutcome {
    Optimal {
        build: Vec<bool>,
        plan: ExpansionPlan,
        best_bound: f64,
    },
    Infeasible,
    Limit,
}

pub(crate) fn solve_design(
    lp: &LinearProgram,
    x: &[VarId],
    block0: &Block,
    grid: &Grid,
    gap: f64,
    deadline: Option<Instant>,
) -> Result<DesignOutcome> {
    let opts = MilpOptions {
        rel_gap: gap,
        time_limit: remaining(deadline),
        ..MilpOptions::default()
    };
    let sol = solve_milp(lp, &opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Ok(DesignOutcome::Infeasible),
        s if s.is_limit() => return Ok(DesignOutcome::Limit),
        s => {
            return Err(CoreError::Solver {
                context: "design problem".into(),
                status: s,
            })
        }
    }
    let build: Vec<bool> = x.iter().map(|v| sol.x[v.0] > 0.5).collect();
    let plan = extract_plan(grid, &build, block0, &sol);
    Ok(DesignOutcome::Optimal {
        build,
        plan,
        best_bound: sol.best_bound,
    })
}

/// Snaps solver noise to zero and rounds to 15 significant digits.
pub(crate) fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        return 0.0;
    }
    format!("{v:.14e}").parse().unwrap_or(v)
}

fn extract_plan(grid: &Grid, build: &[bool], block0: &Block, sol: &Solution) -> ExpansionPlan {
    let sys = grid.system();
    let mut plan = ExpansionPlan::from_build(grid, build);
    let mut dispatch = Dispatch::default();
    for (l, line) in sys.lines.iter().enumerate() {
        dispatch.flows.insert(line.id.clone(), clean(sol.x[block0.flow[l].0]));
    }
    let mut operating = 0.0;
    for (g, gen) in sys.generators.iter().enumerate() {
        let p = clean(sol.x[block0.output[g].0]);
        operating += gen.marginal_cost * p;
        dispatch.outputs.insert(gen.id.clone(), p);
    }
    for (i, bus) in sys.buses.iter().enumerate() {
        dispatch.angles.insert(bus.id.clone(), clean(sol.x[block0.theta[i].0]));
    }
    plan.dispatch0 = dispatch;
    plan.invest_cost = clean(plan.invest_cost);
    plan.operating_cost = clean(operating);
    plan.total_objective = clean(plan.invest_cost + sys.sigma * plan.operating_cost);
    plan
}
