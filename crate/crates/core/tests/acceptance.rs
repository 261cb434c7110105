//! Acceptance suite: one line per criterion, `PASS`, `FAIL`, or
//! `UNATTAINABLE` (a property the model provably lacks; the line carries the
//! counterexample evidence). Exits nonzero on any `FAIL`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use nkeps_core::case_io::plan_to_string;
use nkeps_core::dcopf_subproblem::{dual_objective, min_loss_of_load};
use nkeps_core::extensive_form::ef_size_guard;
use nkeps_core::network_model::Element;
use nkeps_core::psip_oracle::worst_case_contingency;
use nkeps_core::verify::{brute_force_worst, check_plan_compliance, CheckMode};
use nkeps_core::{solve, Contingency, CoreError, Grid, Method, NkEpsilonPolicy, PlannerOptions, RunRecord, RunStatus};
use nkeps_milp::{solve_milp, LinearProgram, MilpOptions, ObjectiveSense, RowSense, Status, VarId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const GAP: f64 = 1e-3;
const CROSS_METHOD_SECS: f64 = 60.0;
const ORACLE_SECS: f64 = 300.0;
const SCALE_SECS: f64 = 300.0;
const SCALE_MAX_CUTS: usize = 25;
const SCALE_MIN_STATES: u128 = 11_000;
const MILP_TOL: f64 = 1e-6;
const BRUTE_LIMIT: u128 = 100_000;
const ORACLE_SYSTEMS: usize = 50;
const PLANS_PER_SYSTEM: usize = 5;
const MILP_CASES: usize = 100;

fn value_tol(d: f64) -> f64 {
    1e-6 * (1.0 + d)
}

#[derive(PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Unattainable,
}

struct Line {
    verdict: Verdict,
    name: &'static str,
    detail: String,
}

impl Line {
    fn new(ok: bool, name: &'static str, detail: String) -> Self {
        Self {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            name,
            detail,
        }
    }

    fn print(&self) {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unattainable => "UNATTAINABLE",
        };
        println!("[{tag}] {}: {}", self.name, self.detail);
    }
}

/// Every cut was violated when emitted and holds at the returned plan.
fn cut_problems(grid: &Grid, rec: &RunRecord) -> usize {
    let tol = value_tol(grid.total_demand());
    let x = rec.plan.as_ref().map(|p| p.build_vector(grid).unwrap());
    rec.cuts
        .iter()
        .filter(|c| c.violation_at_source <= 0.0 || x.as_ref().is_some_and(|x| !c.is_satisfied(x, tol)))
        .count()
}

struct CutTally {
    cuts: usize,
    bad: usize,
}

fn cross_method(tally: &mut CutTally) -> Line {
    let start = Instant::now();
    let opts = PlannerOptions {
        gap: GAP,
        ..PlannerOptions::default()
    };
    let mut problems = Vec::new();
    let mut worst_rel = 0.0f64;
    let mut count = 0;
    for name in SMALL_CASES {
        let case = shipped(name);
        let g = &case.grid;
        if g.num_elements() > 20 || case.policy.k > 2 {
            problems.push(format!("{name} outside N <= 20, k <= 2"));
            continue;
        }
        let recs: Vec<RunRecord> = match [Method::Ef, Method::Bd, Method::Ocs]
            .into_iter()
            .map(|m| solve(m, g, &case.policy, &opts))
            .collect()
        {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        if recs.iter().any(|r| r.status != RunStatus::Optimal) {
            problems.push(format!("{name}: not all optimal"));
            continue;
        }
        count += 1;
        let z0 = recs[0].objective().unwrap();
        for r in &recs {
            tally.cuts += r.cuts.len();
            tally.bad += cut_problems(g, r);
            let z = r.objective().unwrap();
            let rel = (z - z0).abs() / z0.abs().max(1.0);
            worst_rel = worst_rel.max(rel);
            if rel > 2.0 * GAP {
                problems.push(format!("{name}: {} objective {z} vs ef {z0}", r.method));
            }
            let x = r.plan.as_ref().unwrap().build_vector(g).unwrap();
            match check_plan_compliance(g, &case.policy, &x, CheckMode::Enumerate, BRUTE_LIMIT, None) {
                Ok(rep) if rep.passed() => {}
                Ok(_) => problems.push(format!("{name}: {} plan fails enumeration check", r.method)),
                Err(e) => problems.push(format!("{name}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = problems.is_empty() && count >= 10 && secs < CROSS_METHOD_SECS;
    Line::new(
        ok,
        "cross-method equality",
        format!(
            "{count} cases x (ef, bd, ocs), max relative objective difference {worst_rel:.2e} (limit {:.0e}), \
             all plans pass enumeration check, {secs:.1}s (limit {CROSS_METHOD_SECS}s){}",
            2.0 * GAP,
            if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join("; ")) }
        ),
    )
}

/// Worst-case values per (system, plan, j) from brute force, kept for the
/// monotonicity criterion.
struct OracleData {
    systems: Vec<(Grid, Vec<Vec<bool>>)>,
    brute: Vec<Vec<Vec<f64>>>,
}

fn oracle_exactness(rng: &mut ChaCha8Rng) -> (Line, OracleData) {
    let start = Instant::now();
    let mut data = OracleData {
        systems: Vec::new(),
        brute: Vec::new(),
    };
    let mut checks = 0;
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for s in 0..ORACLE_SYSTEMS {
        let grid = random_system(rng, 10, 12);
        let plans: Vec<Vec<bool>> = (0..PLANS_PER_SYSTEM).map(|_| random_build(rng, &grid)).collect();
        let tol = value_tol(grid.total_demand());
        let mut per_plan = Vec::new();
        for (p, x) in plans.iter().enumerate() {
            let mut values = Vec::new();
            for j in 1..=3.min(grid.num_elements()) {
                let (brute, _) = brute_force_worst(&grid, x, j, BRUTE_LIMIT).unwrap();
                values.push(brute);
                match worst_case_contingency(&grid, x, j, None, None) {
                    Ok(r) => {
                        checks += 1;
                        let diff = (r.worst_shed - brute).abs();
                        worst = worst.max(diff / (1.0 + grid.total_demand()));
                        if diff > tol {
                            problems.push(format!("system {s} plan {p} j={j}: oracle {} brute {brute}", r.worst_shed));
                        }
                    }
                    Err(e) => problems.push(format!("system {s} plan {p} j={j}: {e}")),
                }
            }
            per_plan.push(values);
        }
        data.brute.push(per_plan);
        data.systems.push((grid, plans));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = problems.is_empty() && secs < ORACLE_SECS;
    let line = Line::new(
        ok,
        "oracle exactness",
        format!(
            "{ORACLE_SYSTEMS} systems (<= 10 buses, N <= 12) x {PLANS_PER_SYSTEM} plans, {checks} budgets j = 1..3, \
             max |oracle - brute| / (1 + D) = {worst:.2e} (limit 1e-6), {secs:.1}s (limit {ORACLE_SECS}s){}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    );
    (line, data)
}

fn sample_contingencies(rng: &mut ChaCha8Rng, n: usize) -> Vec<Contingency> {
    let mut out: Vec<Contingency> = subsets(n, 0).into_iter().chain(subsets(n, 1)).map(Contingency::from_positions).collect();
    let pairs = subsets(n, 2);
    for _ in 0..8.min(pairs.len()) {
        out.push(Contingency::from_positions(pairs[rng.gen_range(0..pairs.len())].clone()));
    }
    out
}

fn duality_and_cuts(rng: &mut ChaCha8Rng, data: &OracleData, tally: &CutTally) -> Line {
    let mut solves = 0;
    let mut worst = 0.0f64;
    let mut bad = 0;
    for (grid, plans) in &data.systems {
        for x in plans {
            for cont in sample_contingencies(rng, grid.num_elements()) {
                match min_loss_of_load(grid, x, &cont) {
                    Ok(out) => {
                        solves += 1;
                        let dual = dual_objective(grid, x, &cont, &out.dual);
                        let rel = (dual - out.z).abs() / (1.0 + out.z);
                        worst = worst.max(rel);
                        if rel > 1e-6 {
                            bad += 1;
                        }
                    }
                    Err(_) => bad += 1,
                }
            }
        }
    }
    let ok = bad == 0 && tally.bad == 0 && tally.cuts > 0;
    Line::new(
        ok,
        "strong duality and cut validity",
        format!(
            "{solves} loss-of-load LPs, max |primal - dual| / (1 + z) = {worst:.2e} (limit 1e-6), {bad} failures; \
             {} cuts from all method runs, {} violated at their source by <= 0 or violated by the final plan",
            tally.cuts, tally.bad
        ),
    )
}

fn monotonicity(rng: &mut ChaCha8Rng, data: &OracleData) -> Line {
    let mut budget_pairs = 0;
    let mut budget_bad = Vec::new();
    let mut safe_pairs = 0;
    let mut safe_bad = 0;
    let mut line_pairs = 0;
    let mut line_drops = 0;
    let mut example = String::new();
    for (s, ((grid, plans), brute)) in data.systems.iter().zip(&data.brute).enumerate() {
        let tol = value_tol(grid.total_demand());
        for (p, (x, values)) in plans.iter().zip(brute).enumerate() {
            for j in 1..values.len() {
                budget_pairs += 1;
                if values[j] < values[j - 1] - tol {
                    budget_bad.push(format!("system {s} plan {p} j={j}"));
                }
            }
            let n = grid.num_elements();
            for cont in sample_contingencies(rng, n) {
                let z = min_loss_of_load(grid, x, &cont).unwrap().z;
                for u in (0..n).filter(|u| !cont.contains(*u)) {
                    let mut bigger = cont.positions().to_vec();
                    bigger.push(u);
                    let z2 = min_loss_of_load(grid, x, &Contingency::from_positions(bigger)).unwrap().z;
                    let built_line = x[u] && matches!(grid.element(u), Element::Line(_));
                    if built_line {
                        line_pairs += 1;
                        if z2 < z - tol {
                            line_drops += 1;
                            if example.is_empty() {
                                example = format!(
                                    "system {s} plan {p}: {:?} sheds {z:.4}, adding line {} sheds {z2:.4}",
                                    cont.ids(grid),
                                    grid.element_id(u)
                                );
                            }
                        }
                    } else {
                        safe_pairs += 1;
                        if z2 < z - tol {
                            safe_bad += 1;
                        }
                    }
                }
            }
        }
    }
    let detail = format!(
        "budget j -> j+1: {budget_pairs} pairs, {} decreases; inclusion by generator or unbuilt element: \
         {safe_pairs} pairs, {safe_bad} decreases; inclusion by a built line: {line_pairs} pairs, {line_drops} \
         decreases{}",
        budget_bad.len(),
        if example.is_empty() { String::new() } else { format!(" (e.g. {example})") }
    );
    let core_ok = budget_bad.is_empty() && safe_bad == 0;
    let verdict = if !core_ok {
        Verdict::Fail
    } else if line_drops > 0 {
        // Losing a line also drops its Kirchhoff coupling, which can let
        // the remaining lines carry more (Braess). Set inclusion
        // monotonicity therefore does not hold for line failures.
        Verdict::Unattainable
    } else {
        Verdict::Pass
    };
    Line {
        verdict,
        name: "monotonicity",
        detail,
    }
}

fn epsilon_policy(tally: &mut CutTally) -> Line {
    let case = shipped("eps_policy_k4");
    let g = &case.grid;
    let d = g.total_demand();
    let want = [0.0, 0.0, 0.05, 0.10, 0.20];
    if case.policy.k != 4 || case.policy.epsilon != want {
        return Line::new(false, "epsilon-policy semantics", format!("case policy is {:?}", case.policy));
    }
    let rec = match solve(Method::Ocs, g, &case.policy, &PlannerOptions::default()) {
        Ok(r) if r.status == RunStatus::Optimal => r,
        Ok(r) => return Line::new(false, "epsilon-policy semantics", format!("ocs status {}", r.status.as_str())),
        Err(e) => return Line::new(false, "epsilon-policy semantics", e.to_string()),
    };
    tally.cuts += rec.cuts.len();
    tally.bad += cut_problems(g, &rec);
    let x = rec.plan.as_ref().unwrap().build_vector(g).unwrap();
    let mut problems = Vec::new();
    let enumerate = check_plan_compliance(g, &case.policy, &x, CheckMode::Enumerate, BRUTE_LIMIT, None).unwrap();
    let oracle = check_plan_compliance(g, &case.policy, &x, CheckMode::Oracle, BRUTE_LIMIT, None).unwrap();
    if !enumerate.passed() || !oracle.passed() {
        problems.push("optimal plan fails its own policy".to_string());
    }
    let mut tightened = Vec::new();
    for c in &enumerate.checks {
        if c.worst_shed <= value_tol(d) {
            continue;
        }
        let mut eps = case.policy.epsilon.clone();
        eps[c.j] = (c.worst_shed / d - 1e-3).max(0.0);
        let policy = NkEpsilonPolicy::new(4, eps);
        for mode in [CheckMode::Enumerate, CheckMode::Oracle] {
            let rep = check_plan_compliance(g, &policy, &x, mode, BRUTE_LIMIT, None).unwrap();
            if rep.first_failure().map(|f| f.j) != Some(c.j) {
                problems.push(format!("tightening epsilon_{} did not fail at j = {} ({})", c.j, c.j, mode.as_str()));
            }
        }
        tightened.push(c.j);
    }
    if tightened.is_empty() {
        problems.push("plan sheds nothing at any budget, so no tightening is possible".into());
    }
    let shed: Vec<String> = enumerate.checks.iter().map(|c| format!("{:.3}", c.worst_shed)).collect();
    Line::new(
        problems.is_empty(),
        "epsilon-policy semantics",
        format!(
            "k = 4, epsilon = {want:?}, D = {d}: plan passes j = 0..4 in both modes (worst shed {}); \
             tightening epsilon_j below the achieved shed fails at j in {tightened:?}{}",
            shed.join(", "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn scale(tally: &mut CutTally) -> Line {
    let case = shipped("ieee30_augmented");
    let g = &case.grid;
    let mut problems = Vec::new();
    let m = nkeps_core::extensive_form::universe_size(g.num_elements(), case.policy.k);
    if m <= SCALE_MIN_STATES {
        problems.push(format!("only {m} states"));
    }
    match solve(Method::Ef, g, &case.policy, &PlannerOptions::default()) {
        Err(CoreError::SizeGuard { count, .. }) if count == m => {}
        Err(e) => problems.push(format!("ef: unexpected error {e}")),
        Ok(_) => problems.push("ef guard did not refuse".into()),
    }
    if ef_size_guard(g, case.policy.k, u128::MAX).ok() != Some(m) {
        problems.push("ef guard refuses even when overridden".into());
    }
    let opts = PlannerOptions {
        time_limit: Some(Duration::from_secs_f64(SCALE_SECS)),
        ..PlannerOptions::default()
    };
    let start = Instant::now();
    let rec = match solve(Method::Ocs, g, &case.policy, &opts) {
        Ok(r) => r,
        Err(e) => return Line::new(false, "scale target", e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    if rec.status != RunStatus::Optimal {
        problems.push(format!("ocs status {}", rec.status.as_str()));
    }
    if secs >= SCALE_SECS {
        problems.push("over time".into());
    }
    if rec.cuts.len() > SCALE_MAX_CUTS {
        problems.push(format!("{} cut-spawning contingencies", rec.cuts.len()));
    }
    tally.cuts += rec.cuts.len();
    tally.bad += cut_problems(g, &rec);
    if let Some(plan) = &rec.plan {
        let x = plan.build_vector(g).unwrap();
        for mode in [CheckMode::Oracle, CheckMode::Enumerate] {
            match check_plan_compliance(g, &case.policy, &x, mode, BRUTE_LIMIT, None) {
                Ok(rep) if rep.passed() => {}
                Ok(_) => problems.push(format!("plan fails {} check", mode.as_str())),
                Err(e) => problems.push(e.to_string()),
            }
        }
    }
    let spawning: Vec<String> = rec.cuts.iter().map(|c| format!("{{{}}}", c.source.ids(g).join(","))).collect();
    Line::new(
        problems.is_empty(),
        "scale target",
        format!(
            "30-bus-style case N = {}, k = 2, m = {m} (> {SCALE_MIN_STATES}): ef refused by size guard, accepted with \
             the guard overridden; ocs {} in {secs:.1}s (limit {SCALE_SECS}s), objective {:.4}, {} cut-spawning \
             contingencies (limit {SCALE_MAX_CUTS}) {}; plan passes oracle and enumeration checks{}",
            g.num_elements(),
            rec.status.as_str(),
            rec.objective().unwrap_or(f64::NAN),
            rec.cuts.len(),
            spawning.join(" "),
            if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join("; ")) }
        ),
    )
}

fn random_binary_milp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=12);
    let sense = if rng.gen_bool(0.5) {
        ObjectiveSense::Minimize
    } else {
        ObjectiveSense::Maximize
    };
    let mut p = LinearProgram::new(sense);
    for j in 0..n {
        p.add_binary(format!("x{j}"), f64::from(rng.gen_range(-10..=10)));
    }
    for i in 0..rng.gen_range(1..=6) {
        let mut coeffs = Vec::new();
        let mut total = 0.0;
        for j in 0..n {
            let a = f64::from(rng.gen_range(-9..=9));
            if a != 0.0 && rng.gen_bool(0.7) {
                coeffs.push((VarId(j), a));
                total += a.abs();
            }
        }
        let rhs = (rng.gen_range(-0.3..0.7) * total).round();
        let sense = [RowSense::Le, RowSense::Ge, RowSense::Eq][rng.gen_range(0..3)];
        p.add_row(format!("r{i}"), coeffs, sense, rhs);
    }
    p
}

fn enumerate_binary(p: &LinearProgram) -> Option<f64> {
    let n = p.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
        if p.max_violation(&x) > 1e-9 {
            continue;
        }
        let z = p.objective_value(&x);
        best = Some(match (best, p.sense) {
            (None, _) => z,
            (Some(b), ObjectiveSense::Minimize) => b.min(z),
            (Some(b), ObjectiveSense::Maximize) => b.max(z),
        });
    }
    best
}

fn milp_engine(rng: &mut ChaCha8Rng) -> Line {
    let opts = MilpOptions {
        rel_gap: 0.0,
        abs_gap: 1e-9,
        ..MilpOptions::default()
    };
    let mut feasible = 0;
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for c in 0..MILP_CASES {
        let p = random_binary_milp(rng);
        let sol = solve_milp(&p, &opts).unwrap();
        match enumerate_binary(&p) {
            None if sol.status == Status::Infeasible => {}
            None => problems.push(format!("case {c}: {} on an infeasible model", sol.status.as_str())),
            Some(z) => {
                feasible += 1;
                if sol.status != Status::Optimal {
                    problems.push(format!("case {c}: {}", sol.status.as_str()));
                    continue;
                }
                let diff = (sol.objective - z).abs();
                worst = worst.max(diff);
                if diff > MILP_TOL {
                    problems.push(format!("case {c}: {} vs {z}", sol.objective));
                }
            }
        }
    }
    Line::new(
        problems.is_empty(),
        "MILP engine oracle",
        format!(
            "{MILP_CASES} random models with <= 12 binaries ({feasible} feasible), max |objective - enumeration| = \
             {worst:.1e} (limit {MILP_TOL:.0e}), infeasibility matched{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn determinism() -> Line {
    let mut runs = 0;
    let mut problems = Vec::new();
    for name in ["twobus_candidate", "mesh6_n2", "tree6_n2", "eps_policy_k4"] {
        let case = shipped(name);
        for m in [Method::Ef, Method::Bd, Method::Ocs] {
            if m == Method::Ef && case.policy.k > 2 {
                continue;
            }
            let texts: Vec<Option<String>> = (0..3)
                .map(|_| {
                    solve(m, &case.grid, &case.policy, &PlannerOptions::default())
                        .ok()
                        .and_then(|r| r.plan)
                        .map(|p| plan_to_string(&p))
                })
                .collect();
            runs += 1;
            if texts[0].is_none() || texts.iter().any(|t| t != &texts[0]) {
                problems.push(format!("{name} {m}"));
            }
        }
    }
    Line::new(
        problems.is_empty(),
        "determinism",
        format!(
            "{runs} case/method pairs solved 3 times each, plan files byte-identical{}",
            if problems.is_empty() { String::new() } else { format!("; differing: {}", problems.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = rng(20_240_611);
    let mut tally = CutTally { cuts: 0, bad: 0 };
    let mut lines = Vec::new();
    let mut emit = |l: Line| {
        l.print();
        lines.push(l);
    };
    emit(cross_method(&mut tally));
    let (line, data) = oracle_exactness(&mut rng);
    emit(line);
    let eps = epsilon_policy(&mut tally);
    let scale = scale(&mut tally);
    emit(duality_and_cuts(&mut rng, &data, &tally));
    emit(monotonicity(&mut rng, &data));
    emit(eps);
    emit(scale);
    emit(milp_engine(&mut rng));
    emit(determinism());
    let failed = lines.iter().filter(|l| l.verdict == Verdict::Fail).count();
    println!(
        "acceptance: {} pass, {failed} fail, {} unattainable",
        lines.iter().filter(|l| l.verdict == Verdict::Pass).count(),
        lines.iter().filter(|l| l.verdict == Verdict::Unattainable).count()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
