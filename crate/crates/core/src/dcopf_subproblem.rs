//! Minimum loss-of-load DC power flow for a fixed plan and contingency, its
//! dual solution, and the feasibility cut that dual induces.

use nkeps_milp::{solve_lp, LinearProgram, LpOptions, RowId, RowSense, Status, VarId};

use crate::error::{CoreError, Result};
use crate::network_model::{Contingency, Grid};
use crate::options::value_tol;

/// Dual values of the loss-of-load LP. Every family except `alpha` is
/// nonpositive.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Flow balance, per bus.
    pub alpha: Vec<f64>,
    /// Kirchhoff rows `f - B Δθ <= M c` and `B Δθ - f <= M c`, per line.
    pub beta_hat: Vec<f64>,
    pub beta_check: Vec<f64>,
    /// Flow limits `f <= cap` and `-f <= cap`, per line.
    pub delta: Vec<f64>,
    pub eta: Vec<f64>,
    /// Generation limit, per generator.
    pub zeta: Vec<f64>,
    /// Shed limit `q <= D`, per bus.
    pub lambda: Vec<f64>,
    /// Contribution of the angle bounds, `-Θ Σ |reduced cost of θ_i|`.
    pub angle_term: f64,
    /// Dual objective.
    pub objective: f64,
}

/// Variables and rows of a loss-of-load LP.
#[derive(Debug, Clone)]
pub struct PspLayout {
    pub theta: Vec<VarId>,
    pub flow: Vec<VarId>,
    pub output: Vec<VarId>,
    pub shed: Vec<VarId>,
    pub balance: Vec<RowId>,
    pub kirchhoff_hat: Vec<RowId>,
    pub kirchhoff_check: Vec<RowId>,
    pub flow_upper: Vec<RowId>,
    pub flow_lower: Vec<RowId>,
    pub gen_upper: Vec<RowId>,
    pub shed_upper: Vec<RowId>,
}

/// `min(1, 1 - x + d)`: 1 when the line is unbuilt or failed, else 0.
fn kirchhoff_scale(built: bool, failed: bool) -> f64 {
    if built && !failed {
        0.0
    } else {
        1.0
    }
}

fn available(build: &[bool], cont: &Contingency, u: usize) -> f64 {
    if build[u] && !cont.contains(u) {
        1.0
    } else {
        0.0
    }
}

/// Loss-of-load LP for plan `build` under contingency `cont`.
pub fn build_psp(grid: &Grid, build: &[bool], cont: &Contingency) -> (LinearProgram, PspLayout) {
    let sys = grid.system();
    let theta_max = sys.theta_bound;
    let mut lp = LinearProgram::minimize();

    let theta: Vec<VarId> = sys
        .buses
        .iter()
        .map(|b| lp.add_var(format!("theta_{}", b.id), -theta_max, theta_max, 0.0))
        .collect();
    let flow: Vec<VarId> = sys
        .lines
        .iter()
        .map(|l| lp.add_var(format!("f_{}", l.id), f64::NEG_INFINITY, f64::INFINITY, 0.0))
        .collect();
    let output: Vec<VarId> = sys
        .generators
        .iter()
        .map(|g| lp.add_var(format!("p_{}", g.id), 0.0, f64::INFINITY, 0.0))
        .collect();
    let shed: Vec<VarId> = sys
        .buses
        .iter()
        .map(|b| lp.add_var(format!("q_{}", b.id), 0.0, f64::INFINITY, 1.0))
        .collect();

    let mut terms: Vec<Vec<(VarId, f64)>> = (0..grid.num_buses()).map(|i| vec![(shed[i], 1.0)]).collect();
    for g in 0..grid.num_generators() {
        terms[grid.gen_bus(g)].push((output[g], 1.0));
    }
    for l in 0..grid.num_lines() {
        terms[grid.line_to(l)].push((flow[l], 1.0));
        terms[grid.line_from(l)].push((flow[l], -1.0));
    }
    let balance: Vec<RowId> = terms
        .into_iter()
        .enumerate()
        .map(|(i, t)| lp.add_row(format!("bal_{}", sys.buses[i].id), t, RowSense::Eq, sys.buses[i].demand))
        .collect();

    let mut kirchhoff_hat = Vec::new();
    let mut kirchhoff_check = Vec::new();
    let mut flow_upper = Vec::new();
    let mut flow_lower = Vec::new();
    for (l, line) in sys.lines.iter().enumerate() {
        let u = grid.line_position(l);
        let (t, h) = (theta[grid.line_from(l)], theta[grid.line_to(l)]);
        let b = line.susceptance;
        let rhs = grid.big_m(l) * kirchhoff_scale(build[u], cont.contains(u));
        kirchhoff_hat.push(lp.add_row(
            format!("kh_{}", line.id),
            vec![(flow[l], 1.0), (t, -b), (h, b)],
            RowSense::Le,
            rhs,
        ));
        kirchhoff_check.push(lp.add_row(
            format!("kc_{}", line.id),
            vec![(flow[l], -1.0), (t, b), (h, -b)],
            RowSense::Le,
            rhs,
        ));
        let cap = line.capacity * available(build, cont, u);
        flow_upper.push(lp.add_row(format!("fu_{}", line.id), vec![(flow[l], 1.0)], RowSense::Le, cap));
        flow_lower.push(lp.add_row(format!("fl_{}", line.id), vec![(flow[l], -1.0)], RowSense::Le, cap));
    }
    let gen_upper = sys
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            let cap = gen.capacity * available(build, cont, grid.gen_position(g));
            lp.add_row(format!("pu_{}", gen.id), vec![(output[g], 1.0)], RowSense::Le, cap)
        })
        .collect();
    let shed_upper = sys
        .buses
        .iter()
        .enumerate()
        .map(|(i, bus)| lp.add_row(format!("qu_{}", bus.id), vec![(shed[i], 1.0)], RowSense::Le, bus.demand))
        .collect();

    let layout = PspLayout {
        theta,
        flow,
        output,
        shed,
        balance,
        kirchhoff_hat,
        kirchhoff_check,
        flow_upper,
        flow_lower,
        gen_upper,
        shed_upper,
    };
    (lp, layout)
}

/// Optimal loss of load `z` with its dual certificate.
#[derive(Debug, Clone)]
pub struct PspOutcome {
    pub z: f64,
    pub dual: DualSolution,
}

/// Solves the loss-of-load LP and extracts its duals; fails if the duals
/// do not certify `z` to within `1e-6 (1 + z)`.
pub fn min_loss_of_load(grid: &Grid, build: &[bool], cont: &Contingency) -> Result<PspOutcome> {
    let (lp, lay) = build_psp(grid, build, cont);
    let sol = solve_lp(&lp, &LpOptions::default())?;
    if sol.status != Status::Optimal {
        return Err(CoreError::Solver {
            context: format!("loss-of-load LP for contingency {:?}", cont.ids(grid)),
            status: sol.status,
        });
    }
    let z = sol.objective.max(0.0);
    let neg = |r: &RowId| sol.row_duals[r.0].min(0.0);
    let sys = grid.system();
    let alpha: Vec<f64> = lay.balance.iter().map(|r| sol.row_duals[r.0]).collect();
    let beta_hat: Vec<f64> = lay.kirchhoff_hat.iter().map(neg).collect();
    let beta_check: Vec<f64> = lay.kirchhoff_check.iter().map(neg).collect();
    let delta: Vec<f64> = lay.flow_upper.iter().map(neg).collect();
    let eta: Vec<f64> = lay.flow_lower.iter().map(neg).collect();
    let zeta: Vec<f64> = lay.gen_upper.iter().map(neg).collect();
    let lambda: Vec<f64> = lay.shed_upper.iter().map(neg).collect();
    let angle_term = -sys.theta_bound * lay.theta.iter().map(|v| sol.reduced_costs[v.0].abs()).sum::<f64>();

    let mut dual = DualSolution {
        alpha,
        beta_hat,
        beta_check,
        delta,
        eta,
        zeta,
        lambda,
        angle_term,
        objective: 0.0,
    };
    dual.objective = dual_objective(grid, build, cont, &dual);
    if (dual.objective - z).abs() > 1e-6 * (1.0 + z) {
        return Err(CoreError::BadDual {
            lhs: dual.objective,
            z,
        });
    }
    Ok(PspOutcome { z, dual })
}

/// Dual objective of `dual` for the LP at (`build`, `cont`).
pub fn dual_objective(grid: &Grid, build: &[bool], cont: &Contingency, dual: &DualSolution) -> f64 {
    let sys = grid.system();
    let mut v = dual.angle_term;
    for (i, bus) in sys.buses.iter().enumerate() {
        v += bus.demand * (dual.alpha[i] + dual.lambda[i]);
    }
    for (l, line) in sys.lines.iter().enumerate() {
        let u = grid.line_position(l);
        v += grid.big_m(l) * kirchhoff_scale(build[u], cont.contains(u)) * (dual.beta_hat[l] + dual.beta_check[l]);
        v += line.capacity * available(build, cont, u) * (dual.delta[l] + dual.eta[l]);
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        v += gen.capacity * available(build, cont, grid.gen_position(g)) * dual.zeta[g];
    }
    v
}

/// Linear inequality `constant + Σ_u coeffs[u] x_u <= rhs` over the build
/// variables, indexed by universe position.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCut {
    pub coeffs: Vec<f64>,
    pub constant: f64,
    pub rhs: f64,
    pub source: Contingency,
    /// Left side minus right side at the plan that produced the cut.
    pub violation_at_source: f64,
}

impl FeasibilityCut {
    pub fn lhs(&self, build: &[bool]) -> f64 {
        self.constant
            + self
                .coeffs
                .iter()
                .zip(build)
                .filter(|(_, b)| **b)
                .map(|(c, _)| c)
                .sum::<f64>()
    }

    pub fn lhs_relaxed(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn is_satisfied(&self, build: &[bool], tol: f64) -> bool {
        self.lhs(build) <= self.rhs + tol
    }

    /// Same inequality as `other` up to `tol` in every coefficient.
    pub fn same_as(&self, other: &FeasibilityCut, tol: f64) -> bool {
        let scale = |v: f64| tol * (1.0 + v.abs());
        (self.constant - other.constant).abs() <= scale(self.constant)
            && (self.rhs - other.rhs).abs() <= scale(self.rhs)
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| (a - b).abs() <= scale(*a))
    }
}

/// Turns the dual of the LP at (`build`, `cont`) into a cut requiring loss
/// of load at most `rhs`. Refuses when the cut would not reproduce `z` at
/// `build`, or when `build` already satisfies it.
pub fn cut_from_dual(
    grid: &Grid,
    build: &[bool],
    cont: &Contingency,
    outcome: &PspOutcome,
    rhs: f64,
) -> Result<FeasibilityCut> {
    let sys = grid.system();
    let dual = &outcome.dual;
    let n = grid.num_elements();
    let mut coeffs = vec![0.0; n];
    let mut constant = dual.angle_term;
    for (i, bus) in sys.buses.iter().enumerate() {
        constant += bus.demand * (dual.alpha[i] + dual.lambda[i]);
    }
    for (l, line) in sys.lines.iter().enumerate() {
        let u = grid.line_position(l);
        let kb = grid.big_m(l) * (dual.beta_hat[l] + dual.beta_check[l]);
        // M (1 - x + d) clamped at M: constant when failed, M - M x otherwise.
        constant += kb;
        if !cont.contains(u) {
            coeffs[u] = -kb + line.capacity * (dual.delta[l] + dual.eta[l]);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        let u = grid.gen_position(g);
        if !cont.contains(u) {
            coeffs[u] = gen.capacity * dual.zeta[g];
        }
    }
    let cut = FeasibilityCut {
        coeffs,
        constant,
        rhs,
        source: cont.clone(),
        violation_at_source: 0.0,
    };
    let lhs = cut.lhs(build);
    if (lhs - outcome.z).abs() > value_tol(grid.total_demand()).max(1e-6 * (1.0 + outcome.z)) {
        return Err(CoreError::BadDual { lhs, z: outcome.z });
    }
    if outcome.z <= rhs {
        return Err(CoreError::Stall(format!(
            "no cut: loss of load {} does not exceed {rhs}",
            outcome.z
        )));
    }
    Ok(FeasibilityCut {
        violation_at_source: lhs - rhs,
        ..cut
    })
}
