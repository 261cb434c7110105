use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use nkeps_core::case_io::{self, Case};
use nkeps_core::psip_oracle::worst_case_contingency;
use nkeps_core::verify::{check_plan_compliance, CheckMode};
use nkeps_core::{solve, Method, PlannerOptions, RunRecord, RunStatus};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Least-cost expansion planning under the N-k-ε survivability criterion.
#[derive(Parser)]
#[command(name = "nkeps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct SolverFlags {
    /// Relative MILP gap for design problems.
    #[arg(long)]
    gap: Option<f64>,
    /// Wall-clock limit per run, seconds.
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    /// Bound U on the interdiction dual variables.
    #[arg(long = "dual-bound")]
    dual_bound: Option<f64>,
    /// Largest number of contingency states the extensive form accepts.
    #[arg(long = "ef-state-limit")]
    ef_state_limit: Option<u128>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case and write the plan and run report.
    Solve {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        method: Method,
        /// Plan file to write.
        #[arg(long)]
        out: PathBuf,
        /// Report file; defaults to `<out stem>.report.json` next to the plan.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Find the worst failure set of one size for a plan.
    Screen {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long = "dual-bound")]
        dual_bound: Option<f64>,
    },
    /// Check a plan against every budget of the case policy.
    Check {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, value_enum, default_value = "enumerate")]
        mode: ModeArg,
        #[arg(long = "dual-bound")]
        dual_bound: Option<f64>,
        /// Also write the compliance report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several methods on one case and compare them.
    Compare {
        #[arg(long)]
        case: PathBuf,
        /// Comma-separated list, e.g. `ef,bd,ocs`.
        #[arg(long, default_value = "ef,bd,ocs")]
        methods: String,
        #[command(flatten)]
        flags: SolverFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Enumerate,
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load_case(path: &Path) -> anyhow::Result<Case> {
    case_io::read_case(path).with_context(|| format!("reading case {}", path.display()))
}

fn options(case: &Case, flags: &SolverFlags) -> anyhow::Result<PlannerOptions> {
    let mut o = case.planner_options();
    if let Some(g) = flags.gap {
        if !(0.0..1.0).contains(&g) {
            bail!("--gap must lie in [0, 1)");
        }
        o.gap = g;
    }
    if let Some(t) = flags.time_limit {
        if !(t.is_finite() && t > 0.0) {
            bail!("--time-limit must be positive");
        }
        o.time_limit = Some(Duration::from_secs_f64(t));
    }
    if let Some(u) = flags.dual_bound {
        if !(u.is_finite() && u > 0.0) {
            bail!("--dual-bound must be positive");
        }
        o.dual_bound = Some(u);
    }
    if let Some(m) = flags.ef_state_limit {
        o.ef_state_limit = m;
    }
    Ok(o)
}

fn status_code(s: RunStatus) -> u8 {
    match s {
        RunStatus::Optimal => EXIT_OK,
        RunStatus::Infeasible => EXIT_FAIL,
        _ => EXIT_LIMIT,
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plan".into());
    out.with_file_name(format!("{stem}.report.json"))
}

fn load_build(case: &Case, plan: &Path) -> anyhow::Result<Vec<bool>> {
    let p = case_io::read_plan(plan).with_context(|| format!("reading plan {}", plan.display()))?;
    Ok(p.build_vector(&case.grid).with_context(|| format!("plan {} does not match the case", plan.display()))?)
}

fn run(cmd: Command) -> anyhow::Result<u8> {
    match cmd {
        Command::Solve {
            case,
            method,
            out,
            report,
            flags,
        } => {
            let c = load_case(&case)?;
            let opts = options(&c, &flags)?;
            let rec = solve(method, &c.grid, &c.policy, &opts)?;
            let report = report.unwrap_or_else(|| default_report_path(&out));
            if let Some(plan) = &rec.plan {
                case_io::write_plan(plan, &out)?;
            }
            case_io::write_report(&rec, &c.grid, &report)?;
            eprintln!("{}", summary_line(&rec));
            if rec.status == RunStatus::Infeasible {
                eprintln!("no expansion plan meets the policy");
            }
            Ok(status_code(rec.status))
        }
        Command::Screen {
            case,
            plan,
            budget,
            dual_bound,
        } => {
            let c = load_case(&case)?;
            let build = load_build(&c, &plan)?;
            if budget > c.policy.k {
                bail!("--budget {budget} exceeds the policy's k = {}", c.policy.k);
            }
            let bound = dual_bound.or(c.solver.dual_bound);
            let r = worst_case_contingency(&c.grid, &build, budget, bound, None)?;
            let allowed = c.policy.eps(budget) * c.grid.total_demand();
            let pass = r.worst_shed <= allowed + nkeps_core::options::violation_tol(c.grid.total_demand());
            println!("budget: {budget}");
            println!("worst_shed: {}", case_io::round15(r.worst_shed));
            println!("allowed: {}", case_io::round15(allowed));
            println!("failed: {}", r.contingency.ids(&c.grid).join(","));
            println!("result: {}", if pass { "pass" } else { "fail" });
            Ok(if pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Check {
            case,
            plan,
            mode,
            dual_bound,
            out,
        } => {
            let c = load_case(&case)?;
            let build = load_build(&c, &plan)?;
            let mode = match mode {
                ModeArg::Enumerate => CheckMode::Enumerate,
                ModeArg::Oracle => CheckMode::Oracle,
            };
            let limit = PlannerOptions::default().brute_force_limit;
            let bound = dual_bound.or(c.solver.dual_bound);
            let rep = check_plan_compliance(&c.grid, &c.policy, &build, mode, limit, bound)?;
            let text = case_io::compliance_to_string(&rep, &c.grid);
            if let Some(path) = out {
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{text}");
            if let Some(f) = rep.first_failure() {
                eprintln!(
                    "fails at j = {}: worst shed {} exceeds {}",
                    f.j,
                    case_io::round15(f.worst_shed),
                    case_io::round15(f.allowed)
                );
            }
            Ok(if rep.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Compare { case, methods, flags } => {
            let list = parse_methods(&methods)?;
            let c = load_case(&case)?;
            let opts = options(&c, &flags)?;
            let mut recs = Vec::new();
            for m in list {
                recs.push(solve(m, &c.grid, &c.policy, &opts)?);
            }
            print!("{}", compare_table(&recs));
            compare_verdict(&recs, opts.gap)
        }
    }
}

fn parse_methods(list: &str) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m: Method = tok.parse().map_err(|e| anyhow::anyhow!("--methods: {e}"))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("--methods is empty");
    }
    Ok(out)
}

fn summary_line(rec: &RunRecord) -> String {
    match rec.objective() {
        Some(z) => format!(
            "{}: {} objective {} ({} iterations, {} cuts, {:.3}s)",
            rec.method,
            rec.status.as_str(),
            case_io::round15(z),
            rec.iterations,
            rec.cuts.len(),
            rec.times.total
        ),
        None => format!("{}: {} ({:.3}s)", rec.method, rec.status.as_str(), rec.times.total),
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "-".into(), |t| format!("{t:.3}"))
}

fn compare_table(recs: &[RunRecord]) -> String {
    let mut s = format!(
        "{:<6} {:<10} {:>16} {:>10} {:>10} {:>10} {:>10} {:>6} {:>6} {:>8}\n",
        "method", "status", "objective", "time", "rmp", "oracle", "dsp", "iter", "cuts", "states"
    );
    for r in recs {
        let obj = r.objective().map_or_else(|| "-".into(), |z| format!("{:.6}", z));
        s.push_str(&format!(
            "{:<6} {:<10} {:>16} {:>10.3} {:>10} {:>10} {:>10} {:>6} {:>6} {:>8}\n",
            r.method.as_str(),
            r.status.as_str(),
            obj,
            r.times.total,
            fmt_time(r.times.rmp),
            fmt_time(r.times.oracle),
            fmt_time(r.times.dsp),
            r.iterations,
            r.cuts.len(),
            r.states
        ));
    }
    s
}

fn compare_verdict(recs: &[RunRecord], gap: f64) -> anyhow::Result<u8> {
    if let Some(r) = recs.iter().find(|r| r.status.is_limit()) {
        eprintln!("{} stopped at a limit ({})", r.method, r.status.as_str());
        return Ok(EXIT_LIMIT);
    }
    let first = &recs[0];
    for r in &recs[1..] {
        let agree = match (first.objective(), r.objective()) {
            (Some(a), Some(b)) => (a - b).abs() <= 2.0 * gap * a.abs().max(b.abs()).max(1.0),
            (None, None) => true,
            _ => false,
        };
        if !agree {
            eprintln!("{} and {} disagree", first.method, r.method);
            return Ok(EXIT_FAIL);
        }
    }
    if first.status == RunStatus::Infeasible {
        eprintln!("all methods report the case infeasible");
    }
    Ok(EXIT_OK)
}
