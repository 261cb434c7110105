//! Algebraic model of a (mixed-integer) linear program.

use std::fmt;

use crate::error::ModelError;

/// Index of a variable inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear program with optional integrality restrictions.
///
/// Variables and rows are addressed by dense indices in insertion order.
/// Duplicate variable entries inside one row are summed when the problem is
/// handed to the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: ObjectiveSense,
    pub objective_offset: f64,
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            sense,
            objective_offset: 0.0,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self::new(ObjectiveSense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        self.push_var(name.into(), lower, upper, objective, false)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        self.push_var(name.into(), lower, upper, objective, true)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> VarId {
        self.push_var(name.into(), 0.0, 1.0, objective, true)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, objective: f64, integer: bool) -> VarId {
        self.vars.push(Variable {
            name,
            lower,
            upper,
            objective,
            integer,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.vars[var.0].objective = coeff;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_integers(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    /// Objective value of `x` in the problem's own sense, offset included.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .vars
                .iter()
                .zip(x)
                .map(|(v, xv)| v.objective * xv)
                .sum::<f64>()
    }

    /// Row activity `a_i · x`.
    pub fn activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].coeffs.iter().map(|(v, a)| a * x[v.0]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.activity(RowId(i), x);
            let viol = match r.sense {
                RowSense::Le => act - r.rhs,
                RowSense::Ge => r.rhs - act,
                RowSense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Checks the structural invariants: ordered finite-or-infinite bounds,
    /// finite coefficients, valid variable references.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InvalidBounds {
                    var: v.name.clone(),
                    index: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::InvalidBounds {
                    var: v.name.clone(),
                    index: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if !v.objective.is_finite() {
                return Err(ModelError::NonFinite {
                    location: format!("objective coefficient of {}", v.name),
                });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite {
                    location: format!("right-hand side of {}", r.name),
                });
            }
            for (v, a) in &r.coeffs {
                if v.0 >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        row: r.name.clone(),
                        index: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite {
                        location: format!("coefficient of {} in {}", self.vars[v.0].name, r.name),
                    });
                }
            }
        }
        Ok(())
    }
}

fn fmt_term(f: &mut fmt::Formatter<'_>, first: bool, coeff: f64, name: &str) -> fmt::Result {
    if first {
        if coeff < 0.0 {
            write!(f, "- {} {}", -coeff, name)
        } else {
            write!(f, "{} {}", coeff, name)
        }
    } else if coeff < 0.0 {
        write!(f, " - {} {}", -coeff, name)
    } else {
        write!(f, " + {} {}", coeff, name)
    }
}

/// Algebraic dump, one constraint per line (CPLEX LP flavoured).
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}",
            match self.sense {
                ObjectiveSense::Minimize => "Minimize",
                ObjectiveSense::Maximize => "Maximize",
            }
        )?;
        write!(f, " obj: ")?;
        let mut first = true;
        for v in self.vars.iter().filter(|v| v.objective != 0.0) {
            fmt_term(f, first, v.objective, &v.name)?;
            first = false;
        }
        if self.objective_offset != 0.0 || first {
            fmt_term(f, first, self.objective_offset, "")?;
        }
        writeln!(f)?;
        writeln!(f, "Subject To")?;
        for r in &self.rows {
            write!(f, " {}: ", r.name)?;
            let mut first = true;
            for (v, a) in &r.coeffs {
                fmt_term(f, first, *a, &self.vars[v.0].name)?;
                first = false;
            }
            if first {
                write!(f, "0")?;
            }
            writeln!(f, " {} {}", r.sense, r.rhs)?;
        }
        writeln!(f, "Bounds")?;
        for v in &self.vars {
            writeln!(f, " {} <= {} <= {}", v.lower, v.name, v.upper)?;
        }
        let ints: Vec<&str> = self
            .vars
            .iter()
            .filter(|v| v.integer)
            .map(|v| v.name.as_str())
            .collect();
        if !ints.is_empty() {
            writeln!(f, "General")?;
            writeln!(f, " {}", ints.join(" "))?;
        }
        writeln!(f, "End")
    }
}
