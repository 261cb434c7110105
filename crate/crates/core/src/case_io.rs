//! JSON case, plan and report files.
//!
//! Reals are canonicalized to 15 significant digits on read and on write,
//! so parsing a written case or plan reproduces it exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dcopf_subproblem::FeasibilityCut;
use crate::error::{CoreError, Result};
use crate::network_model::{
    validate_policy, Bus, ExpansionPlan, Generator, Grid, Line, NkEpsilonPolicy, PowerSystem, ValidationReport,
    Violation,
};
use crate::options::PlannerOptions;
use crate::run::RunRecord;
use crate::verify::ComplianceReport;

pub const SCHEMA_VERSION: &str = "1";

fn default_theta() -> f64 {
    std::f64::consts::PI
}

/// Optional solver settings stored with a case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_bound: Option<f64>,
}

impl SolverBlock {
    fn is_empty(&self) -> bool {
        self.gap.is_none() && self.time_limit_secs.is_none() && self.dual_bound.is_none()
    }
}

/// On-disk layout of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: String,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub sigma: f64,
    #[serde(default = "default_theta")]
    pub theta_bound: f64,
    pub policy: NkEpsilonPolicy,
    #[serde(default, skip_serializing_if = "SolverBlock::is_empty")]
    pub solver: SolverBlock,
}

/// A parsed and validated case.
#[derive(Debug, Clone)]
pub struct Case {
    pub grid: Grid,
    pub policy: NkEpsilonPolicy,
    pub solver: SolverBlock,
}

impl Case {
    /// Planner options from the case's solver block over the defaults.
    pub fn planner_options(&self) -> PlannerOptions {
        let mut o = PlannerOptions::default();
        if let Some(g) = self.solver.gap {
            o.gap = g;
        }
        if let Some(t) = self.solver.time_limit_secs {
            o.time_limit = Some(std::time::Duration::from_secs_f64(t));
        }
        o.dual_bound = self.solver.dual_bound;
        o
    }

    pub fn to_file(&self) -> CaseFile {
        let sys = self.grid.system();
        CaseFile {
            schema_version: SCHEMA_VERSION.into(),
            buses: sys.buses.clone(),
            generators: sys.generators.clone(),
            lines: sys.lines.clone(),
            sigma: sys.sigma,
            theta_bound: sys.theta_bound,
            policy: self.policy.clone(),
            solver: self.solver.clone(),
        }
    }
}

/// Rounds to 15 significant digits.
pub fn round15(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.14e}").parse().unwrap_or(v)
}

fn canonicalize(f: &mut CaseFile) {
    for b in &mut f.buses {
        b.demand = round15(b.demand);
    }
    for g in &mut f.generators {
        g.capacity = round15(g.capacity);
        g.invest_cost = round15(g.invest_cost);
        g.marginal_cost = round15(g.marginal_cost);
    }
    for l in &mut f.lines {
        l.susceptance = round15(l.susceptance);
        l.capacity = round15(l.capacity);
        l.invest_cost = round15(l.invest_cost);
    }
    f.sigma = round15(f.sigma);
    f.theta_bound = round15(f.theta_bound);
    for e in &mut f.policy.epsilon {
        *e = round15(*e);
    }
    for v in [&mut f.solver.gap, &mut f.solver.time_limit_secs, &mut f.solver.dual_bound]
        .into_iter()
        .flatten()
    {
        *v = round15(*v);
    }
}

fn json_error(what: &str, e: serde_json::Error) -> CoreError {
    CoreError::Parse(format!("{what}: line {}, column {}: {e}", e.line(), e.column()))
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<Case> {
    let mut file: CaseFile = serde_json::from_str(text).map_err(|e| json_error("case syntax error", e))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CoreError::Parse(format!(
            "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
            file.schema_version
        )));
    }
    canonicalize(&mut file);
    case_from_file(file)
}

pub fn case_from_file(file: CaseFile) -> Result<Case> {
    let sys = PowerSystem {
        buses: file.buses,
        generators: file.generators,
        lines: file.lines,
        sigma: file.sigma,
        theta_bound: file.theta_bound,
    };
    let mut rep = crate::network_model::validate_network(&sys);
    rep.violations
        .extend(validate_policy(&file.policy, sys.num_elements()).violations);
    rep.violations.extend(validate_solver(&file.solver).violations);
    rep.into_result()?;
    Ok(Case {
        grid: Grid::new(sys)?,
        policy: file.policy,
        solver: file.solver,
    })
}

fn validate_solver(s: &SolverBlock) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let mut bad = |loc: &str, msg: &str| {
        rep.violations.push(Violation {
            location: loc.into(),
            message: msg.into(),
        })
    };
    if let Some(g) = s.gap {
        if !(0.0..1.0).contains(&g) {
            bad("solver.gap", "must lie in [0, 1)");
        }
    }
    if let Some(t) = s.time_limit_secs {
        if !(t.is_finite() && t > 0.0) {
            bad("solver.time_limit_secs", "must be positive");
        }
    }
    if let Some(u) = s.dual_bound {
        if !(u.is_finite() && u > 0.0) {
            bad("solver.dual_bound", "must be positive");
        }
    }
    rep
}

pub fn read_case(path: &Path) -> Result<Case> {
    parse_case(&read_text(path)?)
}

/// Canonical text of a case.
pub fn case_to_string(case: &Case) -> String {
    let mut f = case.to_file();
    canonicalize(&mut f);
    let mut s = serde_json::to_string_pretty(&f).expect("case serializes");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn canonical_plan(plan: &ExpansionPlan) -> ExpansionPlan {
    let mut p = plan.clone();
    for m in [&mut p.dispatch0.flows, &mut p.dispatch0.outputs, &mut p.dispatch0.angles] {
        for v in m.values_mut() {
            *v = round15(*v);
        }
    }
    p.invest_cost = round15(p.invest_cost);
    p.operating_cost = round15(p.operating_cost);
    p.total_objective = round15(p.total_objective);
    p
}

pub fn plan_to_string(plan: &ExpansionPlan) -> String {
    let mut s = serde_json::to_string_pretty(&canonical_plan(plan)).expect("plan serializes");
    s.push('\n');
    s
}

pub fn parse_plan(text: &str) -> Result<ExpansionPlan> {
    serde_json::from_str(text).map_err(|e| json_error("plan syntax error", e))
}

pub fn write_plan(plan: &ExpansionPlan, path: &Path) -> Result<()> {
    write_text(path, &plan_to_string(plan))
}

pub fn read_plan(path: &Path) -> Result<ExpansionPlan> {
    parse_plan(&read_text(path)?)
}

#[derive(Serialize)]
struct TimesOut {
    total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rmp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dsp: Option<f64>,
}

#[derive(Serialize)]
struct CutOut {
    source: Vec<String>,
    constant: f64,
    rhs: f64,
    violation_at_source: f64,
    coefficients: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ReportOut {
    method: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    invest_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    operating_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_bound: Option<f64>,
    states: u64,
    iterations: usize,
    cuts_generated: usize,
    duplicate_cuts: usize,
    oracle_calls: usize,
    contingencies: Vec<Vec<String>>,
    times: TimesOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    built: Option<Vec<String>>,
    cuts: Vec<CutOut>,
}

fn cut_out(grid: &Grid, cut: &FeasibilityCut) -> CutOut {
    CutOut {
        source: cut.source.ids(grid),
        constant: round15(cut.constant),
        rhs: round15(cut.rhs),
        violation_at_source: round15(cut.violation_at_source),
        coefficients: cut
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(u, c)| (grid.element_id(u).to_string(), round15(*c)))
            .collect(),
    }
}

/// Machine-readable record of a run: objective, phase times, cut counts and
/// the contingencies that spawned cuts.
pub fn report_to_string(rec: &RunRecord, grid: &Grid) -> String {
    let plan = rec.plan.as_ref();
    let out = ReportOut {
        method: rec.method.as_str(),
        status: rec.status.as_str(),
        objective: plan.map(|p| p.total_objective),
        invest_cost: plan.map(|p| p.invest_cost),
        operating_cost: plan.map(|p| p.operating_cost),
        best_bound: rec.best_bound.map(round15),
        states: u64::try_from(rec.states).unwrap_or(u64::MAX),
        iterations: rec.iterations,
        cuts_generated: rec.cuts.len(),
        duplicate_cuts: rec.duplicate_cuts,
        oracle_calls: rec.oracle_calls,
        contingencies: rec.cuts.iter().map(|c| c.source.ids(grid)).collect(),
        times: TimesOut {
            total: rec.times.total,
            rmp: rec.times.rmp,
            oracle: rec.times.oracle,
            dsp: rec.times.dsp,
        },
        built: plan.map(|p| p.built_ids().into_iter().map(String::from).collect()),
        cuts: rec.cuts.iter().map(|c| cut_out(grid, c)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report(rec: &RunRecord, grid: &Grid, path: &Path) -> Result<()> {
    write_text(path, &report_to_string(rec, grid))
}

#[derive(Serialize)]
struct CheckOut {
    j: usize,
    worst_shed: f64,
    allowed: f64,
    passed: bool,
    contingency: Vec<String>,
}

#[derive(Serialize)]
struct ComplianceOut {
    mode: &'static str,
    passed: bool,
    checks: Vec<CheckOut>,
}

pub fn compliance_to_string(rep: &ComplianceReport, grid: &Grid) -> String {
    let out = ComplianceOut {
        mode: rep.mode.as_str(),
        passed: rep.passed(),
        checks: rep
            .checks
            .iter()
            .map(|c| CheckOut {
                j: c.j,
                worst_shed: round15(c.worst_shed),
                allowed: round15(c.allowed),
                passed: c.passed,
                contingency: c.contingency.ids(grid),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("report serializes");
    s.push('\n');
    s
}
