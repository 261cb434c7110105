//! Bounded-variable revised simplex on the computational form
//! `A x - s = 0`, `l <= (x, s) <= u`, minimize `c x`.
//!
//! The driver runs a dual simplex (bound-flipping ratio test, dual steepest
//! edge pricing, cost perturbation) to primal feasibility, then removes the
//! perturbation and any artificial bounds and finishes with a primal simplex
//! if reduced costs turned infeasible.

use std::time::Instant;

use crate::basis::BasisFactor;
use crate::model::{LinearProgram, ObjectiveSense, RowSense};

pub(crate) const PRIMAL_TOL: f64 = 1e-7;
pub(crate) const DUAL_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const ARTIFICIAL_BOX: f64 = 1e6;
const ARTIFICIAL_BOX_MAX: f64 = 1e13;

/// Nonbasic `Zero` means the variable is off its bounds at value `x[j]`
/// (a free column, or one whose artificial bound was lifted).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    Lower,
    Upper,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    Numerical,
}

/// Computational form of a [`LinearProgram`], always minimizing.
#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub n: usize,
    pub m: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// +1 for minimization, -1 when the model maximizes.
    pub obj_sign: f64,
}

impl StdForm {
    pub(crate) fn from_lp(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let obj_sign = match lp.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        for r in lp.rows() {
            let mut entries: Vec<(usize, f64)> = r.coeffs.iter().map(|(v, a)| (v.0, *a)).collect();
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (j, a) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            rows.push(merged);
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j].push((i, a));
            }
        }
        let mut cost = vec![0.0; n + m];
        let mut lower = vec![0.0; n + m];
        let mut upper = vec![0.0; n + m];
        for (j, v) in lp.vars().iter().enumerate() {
            cost[j] = obj_sign * v.objective;
            lower[j] = v.lower;
            upper[j] = v.upper;
        }
        for (i, r) in lp.rows().iter().enumerate() {
            let (l, u) = match r.sense {
                RowSense::Le => (f64::NEG_INFINITY, r.rhs),
                RowSense::Ge => (r.rhs, f64::INFINITY),
                RowSense::Eq => (r.rhs, r.rhs),
            };
            lower[n + i] = l;
            upper[n + i] = u;
        }
        StdForm {
            n,
            m,
            cols,
            rows,
            cost,
            lower,
            upper,
            obj_sign,
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.cols[j].clone()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    fn dot(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            -y[j - self.n]
        }
    }

    /// `rhs += scale * a_j` (row indexed).
    fn scatter(&self, j: usize, scale: f64, rhs: &mut [f64]) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                rhs[i] += a * scale;
            }
        } else {
            rhs[j - self.n] -= scale;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    pub perturb: bool,
    pub deadline: Option<Instant>,
}

impl SimplexOptions {
    pub(crate) fn for_size(n: usize, m: usize) -> Self {
        Self {
            max_iterations: 20_000 + 50 * (n + m),
            perturb: true,
            deadline: None,
        }
    }
}

pub(crate) struct Simplex<'a> {
    sf: &'a StdForm,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    y: Vec<f64>,
    factor: Option<BasisFactor>,
    dse: Vec<f64>,
    /// Variables carrying an artificial bound: (var, original lower, original upper).
    artificial: Vec<(usize, f64, f64)>,
    box_size: f64,
    opts: SimplexOptions,
    pub(crate) iterations: usize,
}

impl<'a> Simplex<'a> {
    /// Builds a solver over `sf` with working bounds `lower`/`upper` for the
    /// structural columns (slack bounds come from `sf`), optionally warm
    /// started from a previous basis.
    pub(crate) fn new(
        sf: &'a StdForm,
        struct_lower: &[f64],
        struct_upper: &[f64],
        warm: Option<&[VarStatus]>,
        opts: SimplexOptions,
    ) -> Self {
        let n = sf.n;
        let m = sf.m;
        let mut lower = sf.lower.clone();
        let mut upper = sf.upper.clone();
        lower[..n].copy_from_slice(struct_lower);
        upper[..n].copy_from_slice(struct_upper);

        let mut status = vec![VarStatus::Lower; n + m];
        let mut basic = Vec::with_capacity(m);
        match warm {
            Some(w) if w.len() == n + m && w.iter().filter(|s| **s == VarStatus::Basic).count() == m => {
                status.copy_from_slice(w);
                for (j, s) in w.iter().enumerate() {
                    if *s == VarStatus::Basic {
                        basic.push(j);
                    }
                }
            }
            _ => {
                for j in 0..n {
                    status[j] = VarStatus::Lower;
                }
                for i in 0..m {
                    status[n + i] = VarStatus::Basic;
                    basic.push(n + i);
                }
            }
        }

        let mut x = vec![0.0; n + m];
        for j in 0..n + m {
            if status[j] != VarStatus::Basic {
                let (s, v) = place_nonbasic(status[j], lower[j], upper[j], 0.0);
                status[j] = s;
                x[j] = v;
            }
        }

        Simplex {
            sf,
            lower,
            upper,
            cost: sf.cost.clone(),
            status,
            basic,
            x,
            d: vec![0.0; n + m],
            y: vec![0.0; m],
            factor: None,
            dse: vec![1.0; m],
            artificial: Vec::new(),
            box_size: ARTIFICIAL_BOX,
            opts,
            iterations: 0,
        }
    }

    pub(crate) fn statuses(&self) -> &[VarStatus] {
        &self.status
    }

    pub(crate) fn primal(&self) -> &[f64] {
        &self.x
    }

    /// Row duals `y` (shadow prices of the min-form problem).
    pub(crate) fn row_duals(&self) -> &[f64] {
        &self.y
    }

    pub(crate) fn reduced_costs(&self) -> &[f64] {
        &self.d
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.sf.n).map(|j| self.sf.cost[j] * self.x[j]).sum()
    }

    fn m(&self) -> usize {
        self.sf.m
    }

    fn time_up(&self) -> bool {
        matches!(self.opts.deadline, Some(t) if Instant::now() >= t)
    }

    /// Factorizes the current basis, repairing singular bases by swapping in
    /// slack columns. Returns `true` if the basis was changed.
    fn refactor(&mut self) -> bool {
        let mut repaired = false;
        for _ in 0..4 {
            let cols: Vec<Vec<(usize, f64)>> = self.basic.iter().map(|&j| self.sf.column(j)).collect();
            match BasisFactor::new(self.m(), &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    return repaired;
                }
                Err(sing) => {
                    repaired = true;
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let j = self.basic[pos];
                        let (s, v) = place_nonbasic(VarStatus::Zero, self.lower[j], self.upper[j], self.x[j]);
                        self.status[j] = s;
                        self.x[j] = v;
                        let slack = self.sf.n + row;
                        self.basic[pos] = slack;
                        self.status[slack] = VarStatus::Basic;
                        self.dse[pos] = 1.0;
                    }
                }
            }
        }
        // Fall back to the all-slack basis, which is always regular.
        for j in 0..self.sf.n + self.m() {
            if self.status[j] == VarStatus::Basic {
                let (s, v) = place_nonbasic(VarStatus::Zero, self.lower[j], self.upper[j], self.x[j]);
                self.status[j] = s;
                self.x[j] = v;
            }
        }
        for i in 0..self.m() {
            self.basic[i] = self.sf.n + i;
            self.status[self.sf.n + i] = VarStatus::Basic;
        }
        self.dse.iter_mut().for_each(|w| *w = 1.0);
        let cols: Vec<Vec<(usize, f64)>> = self.basic.iter().map(|&j| self.sf.column(j)).collect();
        self.factor = Some(BasisFactor::new(self.m(), &cols).expect("slack basis is regular"));
        true
    }

    fn factor(&self) -> &BasisFactor {
        self.factor.as_ref().expect("basis factorized")
    }

    fn compute_primal(&mut self) {
        let m = self.m();
        let mut rhs = vec![0.0; m];
        for j in 0..self.sf.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                self.sf.scatter(j, -self.x[j], &mut rhs);
            }
        }
        let mut out = vec![0.0; m];
        self.factor().ftran_dense(&mut rhs, &mut out);
        for (p, &j) in self.basic.iter().enumerate() {
            self.x[j] = out[p];
        }
    }

    fn compute_duals(&mut self) {
        let m = self.m();
        let mut cb: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        let mut y = vec![0.0; m];
        self.factor().btran(&mut cb, &mut y);
        self.y = y;
        for j in 0..self.sf.n + m {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.cost[j] - self.sf.dot(&self.y, j)
            };
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - PRIMAL_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + PRIMAL_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn dual_infeasible(&self, j: usize) -> bool {
        if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
            return false;
        }
        let dj = self.d[j];
        match self.status[j] {
            VarStatus::Lower => dj < -DUAL_TOL,
            VarStatus::Upper => dj > DUAL_TOL,
            VarStatus::Zero => {
                (dj < -DUAL_TOL && self.x[j] < self.upper[j]) || (dj > DUAL_TOL && self.x[j] > self.lower[j])
            }
            VarStatus::Basic => false,
        }
    }

    /// Moves nonbasic columns to the bound their reduced cost prefers, adding
    /// artificial bounds where that bound is infinite. Returns whether any
    /// primal value changed.
    fn make_dual_feasible(&mut self) -> bool {
        let mut changed = false;
        for j in 0..self.sf.n + self.m() {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let want_upper = dj < -DUAL_TOL;
            let want_lower = dj > DUAL_TOL;
            let ok = match self.status[j] {
                VarStatus::Lower => !want_upper,
                VarStatus::Upper => !want_lower,
                VarStatus::Zero => !want_upper && !want_lower,
                VarStatus::Basic => true,
            };
            if ok {
                continue;
            }
            changed = true;
            if want_upper {
                if self.upper[j].is_infinite() {
                    let base = if self.lower[j].is_finite() { self.lower[j] } else { self.x[j] };
                    self.artificial.push((j, self.lower[j], self.upper[j]));
                    self.upper[j] = base + self.box_size;
                }
                self.status[j] = VarStatus::Upper;
                self.x[j] = self.upper[j];
            } else {
                if self.lower[j].is_infinite() {
                    let base = if self.upper[j].is_finite() { self.upper[j] } else { self.x[j] };
                    self.artificial.push((j, self.lower[j], self.upper[j]));
                    self.lower[j] = base - self.box_size;
                }
                self.status[j] = VarStatus::Lower;
                self.x[j] = self.lower[j];
            }
        }
        changed
    }

    fn lift_artificial_bounds(&mut self) {
        for (j, l, u) in std::mem::take(&mut self.artificial) {
            self.lower[j] = l;
            self.upper[j] = u;
            if self.status[j] != VarStatus::Basic {
                let (s, v) = place_nonbasic(VarStatus::Zero, l, u, self.x[j]);
                self.status[j] = s;
                self.x[j] = v;
            }
        }
    }

    fn perturb_costs(&mut self) {
        for j in 0..self.sf.n + self.m() {
            if self.is_fixed(j) {
                continue;
            }
            let c = self.sf.cost[j];
            let xi = 1e-6 * (1.0 + c.abs()) * (1.0 + unit_hash(j));
            let dir = match self.status[j] {
                VarStatus::Lower => 1.0,
                VarStatus::Upper => -1.0,
                VarStatus::Zero => 0.0,
                VarStatus::Basic => {
                    if self.lower[j].is_finite() {
                        1.0
                    } else if self.upper[j].is_finite() {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            self.cost[j] = c + dir * xi;
        }
    }

    pub(crate) fn solve(&mut self) -> LpStatus {
        self.refactor();
        self.compute_primal();
        self.compute_duals();

        let mut perturbed = false;
        for _round in 0..12 {
            if self.make_dual_feasible() {
                self.compute_primal();
            }
            if self.opts.perturb && !perturbed {
                self.perturb_costs();
                self.compute_duals();
                perturbed = true;
            }

            match self.dual_phase() {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => {
                    if !self.artificial.is_empty() && self.box_size < ARTIFICIAL_BOX_MAX {
                        self.widen_artificial_bounds();
                        continue;
                    }
                    return LpStatus::Infeasible;
                }
                LpStatus::Numerical => {
                    self.refactor();
                    self.compute_primal();
                    self.compute_duals();
                    continue;
                }
                other => return other,
            }

            // Back to the true costs and bounds.
            self.lift_artificial_bounds();
            self.cost.copy_from_slice(&self.sf.cost);
            self.refactor();
            self.compute_primal();
            self.compute_duals();

            if (0..self.sf.n + self.m()).any(|j| self.dual_infeasible(j)) {
                match self.primal_phase() {
                    LpStatus::Optimal => {}
                    LpStatus::Numerical => continue,
                    other => return other,
                }
                self.refactor();
                self.compute_primal();
                self.compute_duals();
            }

            let primal_ok = self.basic.iter().all(|&j| self.infeasibility(j) == 0.0);
            let dual_ok = !(0..self.sf.n + self.m()).any(|j| self.dual_infeasible(j));
            if primal_ok && dual_ok {
                return LpStatus::Optimal;
            }
        }
        LpStatus::Numerical
    }

    fn widen_artificial_bounds(&mut self) {
        let grow = 1e3;
        self.box_size *= grow;
        for &(j, l, u) in &self.artificial {
            if l.is_infinite() {
                let base = if u.is_finite() { u } else { 0.0 };
                self.lower[j] = self.lower[j].min(base - self.box_size);
            }
            if u.is_infinite() {
                let base = if l.is_finite() { l } else { 0.0 };
                self.upper[j] = self.upper[j].max(base + self.box_size);
            }
            if self.status[j] == VarStatus::Lower {
                self.x[j] = self.lower[j];
            } else if self.status[j] == VarStatus::Upper {
                self.x[j] = self.upper[j];
            }
        }
        self.compute_primal();
    }

    fn pivot_row(&self, rho: &[f64], alpha: &mut [f64]) {
        let n = self.sf.n;
        alpha.iter_mut().for_each(|a| *a = 0.0);
        for (i, &r) in rho.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for &(j, a) in &self.sf.rows[i] {
                alpha[j] += r * a;
            }
            alpha[n + i] = -r;
        }
    }

    fn dual_phase(&mut self) -> LpStatus {
        let n = self.sf.n;
        let m = self.m();
        let mut rho = vec![0.0; m];
        let mut alpha_row = vec![0.0; n + m];
        let mut alpha_col = vec![0.0; m];
        let mut tau = vec![0.0; m];
        let mut unit = vec![0.0; m];
        let mut retries = 0;

        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.iterations % 128 == 0 && self.time_up() {
                return LpStatus::TimeLimit;
            }
            {
                let f = self.factor();
                if f.num_updates() >= REFACTOR_EVERY || f.eta_nnz() > 20 * m + 1000 {
                    if self.refactor() {
                        return LpStatus::Numerical;
                    }
                    self.compute_primal();
                    self.compute_duals();
                }
            }

            // Pricing: largest infeasibility relative to its edge weight.
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..m {
                let j = self.basic[p];
                let inf = self.infeasibility(j);
                if inf > 0.0 {
                    let score = inf * inf / self.dse[p];
                    if leave.is_none_or(|(_, s)| score > s) {
                        leave = Some((p, score));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return LpStatus::Optimal;
            };
            let p = self.basic[r];
            let to_upper = self.x[p] > self.upper[p];
            let target = if to_upper { self.upper[p] } else { self.lower[p] };
            let s = if to_upper { 1.0 } else { -1.0 };

            unit.iter_mut().for_each(|u| *u = 0.0);
            unit[r] = 1.0;
            self.factor().btran(&mut unit, &mut rho);
            self.pivot_row(&rho, &mut alpha_row);

            // Bound-flipping ratio test.
            let mut cands: Vec<(f64, usize)> = Vec::new();
            for j in 0..n + m {
                let st = self.status[j];
                if st == VarStatus::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = alpha_row[j];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let sa = s * a;
                let eligible = match st {
                    VarStatus::Lower => sa > 0.0,
                    VarStatus::Upper => sa < 0.0,
                    VarStatus::Zero => true,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let dj = match st {
                    VarStatus::Lower => self.d[j].max(0.0),
                    VarStatus::Upper => (-self.d[j]).max(0.0),
                    _ => self.d[j].abs(),
                };
                cands.push((dj / a.abs(), j));
            }
            if cands.is_empty() {
                return LpStatus::Infeasible;
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut slope = (self.x[p] - target).abs();
            let mut flips: Vec<usize> = Vec::new();
            let mut start = cands.len();
            for (k, &(_, j)) in cands.iter().enumerate() {
                let boxed = self.lower[j].is_finite()
                    && self.upper[j].is_finite()
                    && matches!(self.status[j], VarStatus::Lower | VarStatus::Upper);
                if boxed {
                    let drop = alpha_row[j].abs() * (self.upper[j] - self.lower[j]);
                    if slope - drop > 0.0 && k + 1 < cands.len() {
                        slope -= drop;
                        flips.push(j);
                        continue;
                    }
                }
                start = k;
                break;
            }
            if start == cands.len() {
                // Every candidate flipped and the row is still infeasible.
                return LpStatus::Infeasible;
            }
            // Harris pass over the remaining candidates.
            let mut theta_max = f64::INFINITY;
            for &(_, j) in &cands[start..] {
                let dj = match self.status[j] {
                    VarStatus::Lower => self.d[j].max(0.0),
                    VarStatus::Upper => (-self.d[j]).max(0.0),
                    _ => self.d[j].abs(),
                };
                theta_max = theta_max.min((dj + DUAL_TOL) / alpha_row[j].abs());
            }
            let mut q = cands[start].1;
            let mut best_abs = 0.0;
            for &(t, j) in &cands[start..] {
                if t > theta_max {
                    break;
                }
                let a = alpha_row[j].abs();
                if a > best_abs {
                    best_abs = a;
                    q = j;
                }
            }

            // Entering column.
            let col = self.sf.column(q);
            self.factor
                .as_mut()
                .expect("basis factorized")
                .ftran_sparse(&col, &mut alpha_col);
            let arq = alpha_col[r];
            if arq.abs() < PIVOT_TOL || (arq - alpha_row[q]).abs() > 1e-6 * (1.0 + arq.abs()) {
                retries += 1;
                if retries > 3 {
                    return LpStatus::Numerical;
                }
                if self.refactor() {
                    return LpStatus::Numerical;
                }
                self.compute_primal();
                self.compute_duals();
                continue;
            }
            retries = 0;

            // Dual update.
            let theta_d = self.d[q] / arq;
            for j in 0..n + m {
                if self.status[j] != VarStatus::Basic && alpha_row[j] != 0.0 {
                    self.d[j] -= theta_d * alpha_row[j];
                }
            }
            self.d[q] = 0.0;
            self.d[p] = -theta_d;

            // Bound flips.
            if !flips.is_empty() {
                let mut rhs = vec![0.0; m];
                for &j in &flips {
                    let (ns, nv) = if self.status[j] == VarStatus::Lower {
                        (VarStatus::Upper, self.upper[j])
                    } else {
                        (VarStatus::Lower, self.lower[j])
                    };
                    let delta = nv - self.x[j];
                    self.x[j] = nv;
                    self.status[j] = ns;
                    self.sf.scatter(j, delta, &mut rhs);
                }
                let mut dx = vec![0.0; m];
                self.factor().ftran_dense(&mut rhs, &mut dx);
                for (pos, &bj) in self.basic.iter().enumerate() {
                    self.x[bj] -= dx[pos];
                }
            }

            // Primal step.
            let theta_p = (self.x[p] - target) / arq;
            for (pos, &bj) in self.basic.iter().enumerate() {
                if alpha_col[pos] != 0.0 {
                    self.x[bj] -= theta_p * alpha_col[pos];
                }
            }
            self.x[q] += theta_p;
            self.x[p] = target;

            // Dual steepest-edge weights.
            let wr = rho.iter().map(|v| v * v).sum::<f64>();
            {
                let mut rhs = rho.clone();
                self.factor().ftran_dense(&mut rhs, &mut tau);
            }
            for pos in 0..m {
                if pos == r {
                    continue;
                }
                let ratio = alpha_col[pos] / arq;
                if ratio != 0.0 {
                    self.dse[pos] = (self.dse[pos] + ratio * (ratio * wr - 2.0 * tau[pos])).max(1e-4);
                }
            }
            self.dse[r] = (wr / (arq * arq)).max(1e-4);

            // Basis change.
            self.factor.as_mut().expect("basis factorized").update(r, &alpha_col);
            self.basic[r] = q;
            self.status[q] = VarStatus::Basic;
            self.status[p] = if to_upper && !self.is_fixed(p) {
                VarStatus::Upper
            } else {
                VarStatus::Lower
            };
            self.iterations += 1;
        }
    }

    fn primal_phase(&mut self) -> LpStatus {
        let n = self.sf.n;
        let m = self.m();
        let mut alpha_col = vec![0.0; m];
        let mut degenerate_run = 0usize;

        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.iterations % 128 == 0 && self.time_up() {
                return LpStatus::TimeLimit;
            }
            if self.factor().num_updates() >= REFACTOR_EVERY {
                if self.refactor() {
                    return LpStatus::Numerical;
                }
                self.compute_primal();
            }
            self.compute_duals();

            // Dantzig pricing; Bland's rule after a long degenerate run.
            let bland = degenerate_run > 50;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..n + m {
                if !self.dual_infeasible(j) {
                    continue;
                }
                let score = self.d[j].abs();
                if bland {
                    enter = Some((j, score));
                    break;
                }
                if enter.is_none_or(|(_, s)| score > s) {
                    enter = Some((j, score));
                }
            }
            let Some((q, _)) = enter else {
                return LpStatus::Optimal;
            };
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            let col = self.sf.column(q);
            self.factor
                .as_mut()
                .expect("basis factorized")
                .ftran_sparse(&col, &mut alpha_col);

            let own = if dir > 0.0 {
                self.upper[q] - self.x[q]
            } else {
                self.x[q] - self.lower[q]
            };

            // Harris two-pass ratio test over basic variables.
            let mut theta_max = f64::INFINITY;
            for (pos, &bj) in self.basic.iter().enumerate() {
                let g = -alpha_col[pos] * dir;
                if g > PIVOT_TOL && self.upper[bj].is_finite() {
                    theta_max = theta_max.min(((self.upper[bj] - self.x[bj]).max(0.0) + PRIMAL_TOL) / g);
                } else if g < -PIVOT_TOL && self.lower[bj].is_finite() {
                    theta_max = theta_max.min(((self.x[bj] - self.lower[bj]).max(0.0) + PRIMAL_TOL) / -g);
                }
            }
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut best_abs = 0.0;
            for (pos, &bj) in self.basic.iter().enumerate() {
                let g = -alpha_col[pos] * dir;
                let (t, hits_upper) = if g > PIVOT_TOL && self.upper[bj].is_finite() {
                    ((self.upper[bj] - self.x[bj]).max(0.0) / g, true)
                } else if g < -PIVOT_TOL && self.lower[bj].is_finite() {
                    ((self.x[bj] - self.lower[bj]).max(0.0) / -g, false)
                } else {
                    continue;
                };
                if t <= theta_max && g.abs() > best_abs {
                    best_abs = g.abs();
                    leave = Some((pos, t, hits_upper));
                }
            }

            match leave {
                None if own.is_infinite() => return LpStatus::Unbounded,
                Some((_, t, _)) if own <= t => {
                    self.flip_entering(q, dir, own, &alpha_col);
                    degenerate_run = 0;
                }
                None => {
                    self.flip_entering(q, dir, own, &alpha_col);
                    degenerate_run = 0;
                }
                Some((r, t, hits_upper)) => {
                    let step = dir * t;
                    for (pos, &bj) in self.basic.iter().enumerate() {
                        if alpha_col[pos] != 0.0 {
                            self.x[bj] -= alpha_col[pos] * step;
                        }
                    }
                    self.x[q] += step;
                    let p = self.basic[r];
                    self.x[p] = if hits_upper { self.upper[p] } else { self.lower[p] };
                    self.factor.as_mut().expect("basis factorized").update(r, &alpha_col);
                    self.basic[r] = q;
                    self.status[q] = VarStatus::Basic;
                    self.status[p] = if hits_upper && !self.is_fixed(p) {
                        VarStatus::Upper
                    } else {
                        VarStatus::Lower
                    };
                    self.dse[r] = 1.0;
                    if t == 0.0 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                }
            }
            self.iterations += 1;
        }
    }

    fn flip_entering(&mut self, q: usize, dir: f64, own: f64, alpha_col: &[f64]) {
        let step = dir * own;
        for (pos, &bj) in self.basic.iter().enumerate() {
            if alpha_col[pos] != 0.0 {
                self.x[bj] -= alpha_col[pos] * step;
            }
        }
        if dir > 0.0 {
            self.x[q] = self.upper[q];
            self.status[q] = VarStatus::Upper;
        } else {
            self.x[q] = self.lower[q];
            self.status[q] = VarStatus::Lower;
        }
    }
}

/// Chooses a legal nonbasic status and value given the bounds, preferring
/// `hint` and the value `x`.
fn place_nonbasic(hint: VarStatus, l: f64, u: f64, x: f64) -> (VarStatus, f64) {
    let lf = l.is_finite();
    let uf = u.is_finite();
    match hint {
        VarStatus::Lower if lf => (VarStatus::Lower, l),
        VarStatus::Upper if uf => (VarStatus::Upper, u),
        VarStatus::Zero if !lf && !uf => (VarStatus::Zero, x),
        VarStatus::Zero => {
            if lf && (!uf || (x - l).abs() <= (u - x).abs()) {
                (VarStatus::Lower, l)
            } else {
                (VarStatus::Upper, u)
            }
        }
        _ => {
            if lf {
                (VarStatus::Lower, l)
            } else if uf {
                (VarStatus::Upper, u)
            } else {
                (VarStatus::Zero, 0.0)
            }
        }
    }
}

/// Deterministic pseudo-random value in [0, 1) derived from an index.
fn unit_hash(j: usize) -> f64 {
    let mut z = (j as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}
