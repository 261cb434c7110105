//! Record of one planning run.

use std::fmt;
use std::str::FromStr;

use crate::dcopf_subproblem::FeasibilityCut;
use crate::error::CoreError;
use crate::network_model::ExpansionPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Extensive form.
    Ef,
    /// Benders decomposition with full contingency enumeration.
    Bd,
    /// Online contingency screening.
    Ocs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ef => "ef",
            Method::Bd => "bd",
            Method::Ocs => "ocs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ef" => Ok(Method::Ef),
            "bd" => Ok(Method::Bd),
            "ocs" => Ok(Method::Ocs),
            other => Err(CoreError::Parse(format!("unknown method `{other}` (expected ef, bd or ocs)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    IterationLimit,
    CutLimit,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Optimal => "optimal",
            RunStatus::Infeasible => "infeasible",
            RunStatus::TimeLimit => "time_limit",
            RunStatus::IterationLimit => "iteration_limit",
            RunStatus::CutLimit => "cut_limit",
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, RunStatus::TimeLimit | RunStatus::IterationLimit | RunStatus::CutLimit)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wall time per phase, seconds. Phases a method does not have stay `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimes {
    pub total: f64,
    pub rmp: Option<f64>,
    pub oracle: Option<f64>,
    pub dsp: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: Method,
    pub status: RunStatus,
    /// Present only when `status` is optimal.
    pub plan: Option<ExpansionPlan>,
    pub best_bound: Option<f64>,
    pub iterations: usize,
    /// Cuts in the order they were added.
    pub cuts: Vec<FeasibilityCut>,
    pub duplicate_cuts: usize,
    pub oracle_calls: usize,
    /// Size of the contingency universe, m.
    pub states: u128,
    pub times: PhaseTimes,
}

impl RunRecord {
    pub(crate) fn new(method: Method, states: u128) -> Self {
        Self {
            method,
            status: RunStatus::Infeasible,
            plan: None,
            best_bound: None,
            iterations: 0,
            cuts: Vec::new(),
            duplicate_cuts: 0,
            oracle_calls: 0,
            states,
            times: PhaseTimes::default(),
        }
    }

    pub fn objective(&self) -> Option<f64> {
        self.plan.as_ref().map(|p| p.total_objective)
    }
}
