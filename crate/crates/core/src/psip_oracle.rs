//! Worst-case contingency search. The max-min interdiction problem is made
//! single level by replacing the operator's loss-of-load LP with its dual;
//! products of a dual variable and a failure indicator are linearized with
//! a bound U on the dual variables.

use std::time::Instant;

use nkeps_milp::{solve_milp, LinearProgram, MilpOptions, RowSense, Status, VarId};

use crate::dcopf_subproblem::{min_loss_of_load, PspOutcome};
use crate::error::{CoreError, Result};
use crate::network_model::{Contingency, Grid};
use crate::options::{remaining, value_tol};

/// `r = u d` for `u` in `[-U, 0]` and binary `d`.
#[derive(Debug, Clone, Copy)]
pub struct Product {
    pub r: VarId,
    pub dual: VarId,
    pub d: VarId,
}

#[derive(Debug, Clone)]
pub struct MpsipLayout {
    /// Failure indicators in universe order.
    pub d: Vec<VarId>,
    pub alpha: Vec<VarId>,
    pub lambda: Vec<VarId>,
    pub beta_hat: Vec<VarId>,
    pub beta_check: Vec<VarId>,
    pub delta: Vec<VarId>,
    pub eta: Vec<VarId>,
    pub zeta: Vec<VarId>,
    pub products: Vec<Product>,
}

pub fn default_dual_bound(grid: &Grid) -> f64 {
    grid.max_big_m().max(1.0)
}

/// Single-level interdiction MILP for plan `build` and budget `j`.
pub fn build_mpsip(grid: &Grid, build: &[bool], j: usize, u_bound: f64) -> (LinearProgram, MpsipLayout) {
    let sys = grid.system();
    let ub = u_bound;
    let mut lp = LinearProgram::maximize();
    let d: Vec<VarId> = (0..grid.num_elements())
        .map(|u| lp.add_binary(format!("d_{}", grid.element_id(u)), 0.0))
        .collect();
    lp.add_row("budget", d.iter().map(|v| (*v, 1.0)).collect(), RowSense::Eq, j as f64);

    let nb = grid.num_buses();
    let alpha: Vec<VarId> = sys
        .buses
        .iter()
        .map(|b| lp.add_var(format!("alpha_{}", b.id), -ub, ub, b.demand))
        .collect();
    let lambda: Vec<VarId> = sys
        .buses
        .iter()
        .map(|b| lp.add_var(format!("lambda_{}", b.id), -ub, 0.0, b.demand))
        .collect();
    let mut theta_col: Vec<Vec<(VarId, f64)>> = Vec::with_capacity(nb);
    for b in &sys.buses {
        let up = lp.add_var(format!("mu_up_{}", b.id), -ub, 0.0, sys.theta_bound);
        let dn = lp.add_var(format!("mu_dn_{}", b.id), -ub, 0.0, sys.theta_bound);
        theta_col.push(vec![(up, 1.0), (dn, -1.0)]);
    }

    let mut products = Vec::new();
    let mut product = |lp: &mut LinearProgram, name: String, dual: VarId, dv: VarId, obj: f64| {
        let r = lp.add_var(name.clone(), -ub, 0.0, obj);
        lp.add_row(format!("{name}_lo_d"), vec![(r, 1.0), (dv, ub)], RowSense::Ge, 0.0);
        lp.add_row(format!("{name}_lo_u"), vec![(r, 1.0), (dual, -1.0)], RowSense::Ge, 0.0);
        lp.add_row(format!("{name}_up"), vec![(r, 1.0), (dual, -1.0), (dv, ub)], RowSense::Le, ub);
        products.push(Product { r, dual, d: dv });
    };

    let mut beta_hat = Vec::new();
    let mut beta_check = Vec::new();
    let mut delta = Vec::new();
    let mut eta = Vec::new();
    for (l, line) in sys.lines.iter().enumerate() {
        let u = grid.line_position(l);
        let m = grid.big_m(l);
        let f = line.capacity;
        let built = build[u];
        // Unbuilt: Kirchhoff rows always relaxed, no capacity.
        // Built: relaxed and without capacity exactly when failed.
        let (kirch_obj, cap_obj) = if built { (0.0, f) } else { (m, 0.0) };
        let bh = lp.add_var(format!("beta_hat_{}", line.id), -ub, 0.0, kirch_obj);
        let bc = lp.add_var(format!("beta_check_{}", line.id), -ub, 0.0, kirch_obj);
        let de = lp.add_var(format!("delta_{}", line.id), -ub, 0.0, cap_obj);
        let et = lp.add_var(format!("eta_{}", line.id), -ub, 0.0, cap_obj);
        if built {
            product(&mut lp, format!("r1_{}", line.id), bh, d[u], m);
            product(&mut lp, format!("r2_{}", line.id), bc, d[u], m);
            product(&mut lp, format!("r3_{}", line.id), de, d[u], -f);
            product(&mut lp, format!("r4_{}", line.id), et, d[u], -f);
        }
        let (t, h) = (grid.line_from(l), grid.line_to(l));
        lp.add_row(
            format!("col_f_{}", line.id),
            vec![(alpha[h], 1.0), (alpha[t], -1.0), (bh, 1.0), (bc, -1.0), (de, 1.0), (et, -1.0)],
            RowSense::Eq,
            0.0,
        );
        let b = line.susceptance;
        theta_col[t].extend([(bh, -b), (bc, b)]);
        theta_col[h].extend([(bh, b), (bc, -b)]);
        beta_hat.push(bh);
        beta_check.push(bc);
        delta.push(de);
        eta.push(et);
    }
    for (i, col) in theta_col.into_iter().enumerate() {
        lp.add_row(format!("col_theta_{}", sys.buses[i].id), col, RowSense::Eq, 0.0);
    }

    let mut zeta = Vec::new();
    for (g, gen) in sys.generators.iter().enumerate() {
        let u = grid.gen_position(g);
        let built = build[u];
        let z = lp.add_var(
            format!("zeta_{}", gen.id),
            -ub,
            0.0,
            if built { gen.capacity } else { 0.0 },
        );
        if built {
            product(&mut lp, format!("r5_{}", gen.id), z, d[u], -gen.capacity);
        }
        lp.add_row(
            format!("col_p_{}", gen.id),
            vec![(alpha[grid.gen_bus(g)], 1.0), (z, 1.0)],
            RowSense::Le,
            0.0,
        );
        zeta.push(z);
    }
    for (i, bus) in sys.buses.iter().enumerate() {
        lp.add_row(
            format!("col_q_{}", bus.id),
            vec![(alpha[i], 1.0), (lambda[i], 1.0)],
            RowSense::Le,
            1.0,
        );
    }

    let layout = MpsipLayout {
        d,
        alpha,
        lambda,
        beta_hat,
        beta_check,
        delta,
        eta,
        zeta,
        products,
    };
    (lp, layout)
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub contingency: Contingency,
    /// Optimal value of the interdiction MILP.
    pub worst_shed: f64,
    /// The MILP was solved to its gap.
    pub certified: bool,
    /// Loss-of-load LP re-solved at the chosen contingency.
    pub audit: PspOutcome,
    pub nodes: usize,
    /// Largest `|r - u d|` over all linearized products.
    pub linearization_error: f64,
    pub mpsip_secs: f64,
    pub audit_secs: f64,
}

/// Finds a size-`j` failure set maximizing minimum loss of load under plan
/// `build`, then audits the answer against the loss-of-load LP.
pub fn worst_case_contingency(
    grid: &Grid,
    build: &[bool],
    j: usize,
    dual_bound: Option<f64>,
    deadline: Option<Instant>,
) -> Result<OracleResult> {
    let n = grid.num_elements();
    if j > n {
        return Err(CoreError::Parse(format!("budget {j} exceeds the number of elements {n}")));
    }
    let d_total = grid.total_demand();
    let u_bound = dual_bound.unwrap_or_else(|| default_dual_bound(grid));
    let start = Instant::now();
    let (lp, lay) = build_mpsip(grid, build, j, u_bound);
    let opts = MilpOptions {
        rel_gap: 0.0,
        abs_gap: 1e-7 * (1.0 + d_total),
        time_limit: remaining(deadline),
        ..MilpOptions::default()
    };
    let sol = solve_milp(&lp, &opts)?;
    if sol.status != Status::Optimal {
        return Err(CoreError::Solver {
            context: format!("interdiction problem with budget {j}"),
            status: sol.status,
        });
    }
    let mpsip_secs = start.elapsed().as_secs_f64();
    let failed: Vec<bool> = lay.d.iter().map(|v| sol.x[v.0] > 0.5).collect();
    let contingency = Contingency::from_indicator(&failed);
    let linearization_error = lay
        .products
        .iter()
        .map(|p| (sol.x[p.r.0] - sol.x[p.dual.0] * sol.x[p.d.0]).abs())
        .fold(0.0, f64::max);

    let audit_start = Instant::now();
    let audit = min_loss_of_load(grid, build, &contingency)?;
    let audit_secs = audit_start.elapsed().as_secs_f64();
    let worst_shed = sol.objective.clamp(0.0, d_total);
    if (audit.z - worst_shed).abs() > value_tol(d_total) {
        return Err(CoreError::Audit {
            oracle: worst_shed,
            psp: audit.z,
        });
    }
    Ok(OracleResult {
        contingency,
        worst_shed,
        certified: true,
        audit,
        nodes: sol.nodes,
        linearization_error,
        mpsip_secs,
        audit_secs,
    })
}
