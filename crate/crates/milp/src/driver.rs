//! Public solve entry points: a single LP, and LP-based branch and bound.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;
use std::time::Instant;

use crate::error::ModelError;
use crate::model::LinearProgram;
use crate::simplex::{LpStatus, Simplex, SimplexOptions, StdForm, VarStatus};
use crate::solution::{LpOptions, MilpOptions, Solution, Status};

fn map_status(s: LpStatus) -> Status {
    match s {
        LpStatus::Optimal => Status::Optimal,
        LpStatus::Infeasible => Status::Infeasible,
        LpStatus::Unbounded => Status::Unbounded,
        LpStatus::IterationLimit => Status::IterationLimit,
        LpStatus::TimeLimit => Status::TimeLimit,
        LpStatus::Numerical => Status::NumericalFailure,
    }
}

/// Solves the continuous relaxation of `lp` (integrality is ignored).
pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<Solution, ModelError> {
    lp.validate()?;
    let sf = StdForm::from_lp(lp);
    let mut sopts = SimplexOptions::for_size(sf.n, sf.m);
    if let Some(it) = opts.max_iterations {
        sopts.max_iterations = it;
    }
    sopts.deadline = opts.time_limit.map(|d| Instant::now() + d);
    let lower: Vec<f64> = sf.lower[..sf.n].to_vec();
    let upper: Vec<f64> = sf.upper[..sf.n].to_vec();
    let mut spx = Simplex::new(&sf, &lower, &upper, None, sopts);
    let st = spx.solve();
    if st != LpStatus::Optimal {
        return Ok(Solution::empty(map_status(st), spx.iterations));
    }
    let x = spx.primal()[..sf.n].to_vec();
    let objective = lp.objective_value(&x);
    let row_duals = spx.row_duals().iter().map(|y| sf.obj_sign * y).collect();
    let reduced_costs = spx.reduced_costs()[..sf.n].iter().map(|d| sf.obj_sign * d).collect();
    Ok(Solution {
        status: Status::Optimal,
        x,
        objective,
        row_duals,
        reduced_costs,
        best_bound: objective,
        gap: 0.0,
        nodes: 0,
        iterations: spx.iterations,
    })
}

/// Solves `lp` to optimality (within the gap tolerances) by best-bound
/// branch and bound. Pure LPs are passed to [`solve_lp`].
pub fn solve_milp(lp: &LinearProgram, opts: &MilpOptions) -> Result<Solution, ModelError> {
    if !lp.is_mip() {
        let lp_opts = LpOptions {
            time_limit: opts.time_limit,
            max_iterations: None,
        };
        return solve_lp(lp, &lp_opts);
    }
    lp.validate()?;
    Ok(BranchAndBound::new(lp, opts).run())
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Node {
    bound: f64,
    /// Bound tightenings relative to the root: (var, lower, upper).
    changes: Vec<(usize, f64, f64)>,
    warm: Option<Rc<Vec<VarStatus>>>,
}

struct BranchAndBound<'a> {
    lp: &'a LinearProgram,
    sf: StdForm,
    opts: &'a MilpOptions,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    integer: Vec<usize>,
    deadline: Option<Instant>,
    iterations: usize,
}

impl<'a> BranchAndBound<'a> {
    fn new(lp: &'a LinearProgram, opts: &'a MilpOptions) -> Self {
        let sf = StdForm::from_lp(lp);
        let mut root_lower = sf.lower[..sf.n].to_vec();
        let mut root_upper = sf.upper[..sf.n].to_vec();
        let mut integer = Vec::new();
        for (j, v) in lp.vars().iter().enumerate() {
            if v.integer {
                integer.push(j);
                root_lower[j] = (root_lower[j] - opts.int_tol).ceil();
                root_upper[j] = (root_upper[j] + opts.int_tol).floor();
            }
        }
        Self {
            lp,
            sf,
            opts,
            root_lower,
            root_upper,
            integer,
            deadline: opts.time_limit.map(|d| Instant::now() + d),
            iterations: 0,
        }
    }

    fn tolerance(&self, incumbent: f64) -> f64 {
        self.opts.abs_gap.max(self.opts.rel_gap * incumbent.abs())
    }

    /// Reduced cost fixing: an integer variable at a bound whose reduced
    /// cost would push the relaxation value `z` past `cutoff` after moving
    /// it by `t` units can move at most `t - 1` units.
    #[allow(clippy::too_many_arguments)]
    fn fix_by_reduced_cost(
        &self,
        z: f64,
        x: &[f64],
        d: &[f64],
        cutoff: f64,
        lower: &mut [f64],
        upper: &mut [f64],
        changes: &mut Vec<(usize, f64, f64)>,
    ) {
        let slack = cutoff - z;
        if !(slack.is_finite() && slack >= 0.0) {
            return;
        }
        for &j in &self.integer {
            if lower[j] == upper[j] {
                continue;
            }
            let dj = d[j];
            if dj > 1e-9 && (x[j] - lower[j]).abs() <= self.opts.int_tol {
                let reach = (slack / dj + 1e-9).floor();
                if lower[j] + reach < upper[j] {
                    upper[j] = lower[j] + reach;
                    changes.push((j, lower[j], upper[j]));
                }
            } else if dj < -1e-9 && (upper[j] - x[j]).abs() <= self.opts.int_tol {
                let reach = (slack / -dj + 1e-9).floor();
                if upper[j] - reach > lower[j] {
                    lower[j] = upper[j] - reach;
                    changes.push((j, lower[j], upper[j]));
                }
            }
        }
    }

    fn run(mut self) -> Solution {
        let n = self.sf.n;
        if self.integer.iter().any(|&j| self.root_lower[j] > self.root_upper[j]) {
            return Solution::empty(Status::Infeasible, 0);
        }

        let mut open: BTreeSet<(Key, usize)> = BTreeSet::new();
        let mut nodes: BTreeMap<usize, Node> = BTreeMap::new();
        let mut next_id = 1usize;
        open.insert((Key(f64::NEG_INFINITY), 0));
        nodes.insert(
            0,
            Node {
                bound: f64::NEG_INFINITY,
                changes: Vec::new(),
                warm: None,
            },
        );

        // Incumbent in min form: (value, node id, x).
        let mut incumbent: Option<(f64, usize, Vec<f64>)> = None;
        let mut processed = 0usize;
        let mut stop: Option<Status> = None;
        // Root relaxation (value, point, reduced costs), in min form.
        let mut root_lp: Option<(f64, Vec<f64>, Vec<f64>)> = None;

        while let Some(&(key, _)) = open.first() {
            if let Some((inc, _, _)) = &incumbent {
                if key.0 >= inc - self.tolerance(*inc) {
                    break;
                }
            }
            if let Some(limit) = self.opts.node_limit {
                if processed >= limit {
                    stop = Some(Status::NodeLimit);
                    break;
                }
            }
            if matches!(self.deadline, Some(t) if Instant::now() >= t) {
                stop = Some(Status::TimeLimit);
                break;
            }

            // Dive depth-first until an incumbent exists, then best bound.
            let id = if incumbent.is_none() {
                *nodes.keys().next_back().expect("open node")
            } else {
                open.first().expect("open node").1
            };
            let node = nodes.remove(&id).expect("node stored");
            open.remove(&(Key(node.bound), id));
            processed += 1;

            let mut lower = self.root_lower.clone();
            let mut upper = self.root_upper.clone();
            for &(j, l, u) in &node.changes {
                lower[j] = lower[j].max(l);
                upper[j] = upper[j].min(u);
            }
            if self.integer.iter().any(|&j| lower[j] > upper[j]) {
                continue;
            }
            let mut sopts = SimplexOptions::for_size(n, self.sf.m);
            sopts.deadline = self.deadline;
            let mut spx = Simplex::new(&self.sf, &lower, &upper, node.warm.as_deref().map(|v| v.as_slice()), sopts);
            let st = spx.solve();
            self.iterations += spx.iterations;
            match st {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    if id == 0 {
                        return Solution {
                            nodes: processed,
                            ..Solution::empty(Status::Unbounded, self.iterations)
                        };
                    }
                    continue;
                }
                LpStatus::TimeLimit => {
                    // Put the node back so the reported bound stays valid.
                    open.insert((Key(node.bound), id));
                    nodes.insert(id, node);
                    stop = Some(Status::TimeLimit);
                    break;
                }
                LpStatus::IterationLimit | LpStatus::Numerical => {
                    open.insert((Key(node.bound), id));
                    nodes.insert(id, node);
                    stop = Some(Status::NumericalFailure);
                    break;
                }
            }
            let z = spx.objective();
            if let Some((inc, _, _)) = &incumbent {
                if z >= inc - self.tolerance(*inc) {
                    continue;
                }
            }

            let x = spx.primal();
            if id == 0 {
                root_lp = Some((z, x[..n].to_vec(), spx.reduced_costs()[..n].to_vec()));
            }
            let mut branch: Option<(usize, f64)> = None;
            for &j in &self.integer {
                let v = x[j];
                let frac = v - v.floor();
                let dist = frac.min(1.0 - frac);
                if dist > self.opts.int_tol && branch.is_none_or(|(_, best)| dist > best + 1e-12) {
                    branch = Some((j, dist));
                }
            }

            match branch {
                None => {
                    let better = match &incumbent {
                        None => true,
                        Some((inc, inc_id, _)) => z < inc - 1e-9 || ((z - inc).abs() <= 1e-9 && id < *inc_id),
                    };
                    if better {
                        let mut point = x[..n].to_vec();
                        for &j in &self.integer {
                            point[j] = point[j].round();
                        }
                        if let Some((z0, x0, d0)) = &root_lp {
                            let cutoff = z - self.tolerance(z);
                            let (mut lo, mut up) = (self.root_lower.clone(), self.root_upper.clone());
                            self.fix_by_reduced_cost(*z0, x0, d0, cutoff, &mut lo, &mut up, &mut Vec::new());
                            self.root_lower = lo;
                            self.root_upper = up;
                        }
                        incumbent = Some((z, id, point));
                    }
                }
                Some((j, _)) => {
                    let v = x[j];
                    let warm = Rc::new(spx.statuses().to_vec());
                    let mut base = node.changes;
                    if let Some((inc, _, _)) = &incumbent {
                        let cutoff = inc - self.tolerance(*inc);
                        let d = spx.reduced_costs()[..n].to_vec();
                        let (mut lo, mut up) = (lower.clone(), upper.clone());
                        self.fix_by_reduced_cost(z, &x[..n], &d, cutoff, &mut lo, &mut up, &mut base);
                    }
                    let mut down = base.clone();
                    down.push((j, lower[j], v.floor()));
                    let mut up = base;
                    up.push((j, v.ceil(), upper[j]));
                    for changes in [down, up] {
                        let cid = next_id;
                        next_id += 1;
                        open.insert((Key(z), cid));
                        nodes.insert(
                            cid,
                            Node {
                                bound: z,
                                changes,
                                warm: Some(Rc::clone(&warm)),
                            },
                        );
                    }
                }
            }
        }

        let open_bound = open.first().map(|(k, _)| k.0);
        let sign = self.sf.obj_sign;
        match incumbent {
            None => {
                let status = stop.unwrap_or(Status::Infeasible);
                let mut sol = Solution::empty(status, self.iterations);
                sol.nodes = processed;
                if let Some(b) = open_bound {
                    sol.best_bound = sign * b + self.lp.objective_offset;
                }
                sol
            }
            Some((inc, _, point)) => {
                let bound_min = match (stop, open_bound) {
                    (Some(_), Some(b)) => b.min(inc),
                    (None, Some(b)) => b.min(inc),
                    _ => inc,
                };
                let objective = self.lp.objective_value(&point);
                let best_bound = sign * bound_min + self.lp.objective_offset;
                let diff = (inc - bound_min).max(0.0);
                let gap = if diff == 0.0 { 0.0 } else { diff / inc.abs().max(1e-10) };
                Solution {
                    status: stop.unwrap_or(Status::Optimal),
                    x: point,
                    objective,
                    row_duals: Vec::new(),
                    reduced_costs: Vec::new(),
                    best_bound,
                    gap,
                    nodes: processed,
                    iterations: self.iterations,
                }
            }
        }
    }
}
