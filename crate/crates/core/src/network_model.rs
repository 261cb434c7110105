//! Power system data, the N-k-ε policy, contingencies and expansion plans.
//!
//! Generators and lines share one id namespace. Sorting all of them by id
//! gives the element universe: contingencies and build vectors are indexed
//! by position in that order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    /// MW.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    /// MW.
    pub capacity: f64,
    pub invest_cost: f64,
    /// Cost per MWh in the no-contingency dispatch.
    pub marginal_cost: f64,
    pub existing: bool,
}

/// Transmission element from `from` (tail) to `to` (head). Positive flow runs
/// from tail to head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub susceptance: f64,
    /// MW.
    pub capacity: f64,
    pub invest_cost: f64,
    pub existing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    /// Weight of operating cost against investment cost.
    pub sigma: f64,
    /// Bound on every phase angle, radians.
    pub theta_bound: f64,
}

impl PowerSystem {
    pub fn num_elements(&self) -> usize {
        self.generators.len() + self.lines.len()
    }

    pub fn total_demand(&self) -> f64 {
        total_demand(self)
    }
}

pub fn total_demand(sys: &PowerSystem) -> f64 {
    sys.buses.iter().map(|b| b.demand).sum()
}

/// Contingency budget `k` and allowed shed fractions `ε_0..ε_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NkEpsilonPolicy {
    pub k: usize,
    pub epsilon: Vec<f64>,
}

impl NkEpsilonPolicy {
    pub fn new(k: usize, epsilon: Vec<f64>) -> Self {
        Self { k, epsilon }
    }

    /// Plain N-k: no shedding allowed for any failure count.
    pub fn strict(k: usize) -> Self {
        Self {
            k,
            epsilon: vec![0.0; k + 1],
        }
    }

    pub fn eps(&self, j: usize) -> f64 {
        self.epsilon[j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(CoreError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

fn check_real(rep: &mut ValidationReport, loc: String, v: f64, positive: bool) {
    if !v.is_finite() {
        rep.push(loc, "must be finite");
    } else if positive && v <= 0.0 {
        rep.push(loc, "must be positive");
    } else if !positive && v < 0.0 {
        rep.push(loc, "must be nonnegative");
    }
}

/// Checks every structural invariant of the system alone.
pub fn validate_network(sys: &PowerSystem) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let mut bus_ids: HashMap<&str, usize> = HashMap::new();
    for (i, b) in sys.buses.iter().enumerate() {
        if bus_ids.insert(b.id.as_str(), i).is_some() {
            rep.push(format!("buses[{i}].id"), format!("duplicate bus id `{}`", b.id));
        }
        check_real(&mut rep, format!("buses[{i}].demand"), b.demand, false);
    }
    if sys.buses.is_empty() {
        rep.push("buses", "at least one bus is required");
    }

    let mut elem_ids: HashMap<&str, ()> = HashMap::new();
    for (i, g) in sys.generators.iter().enumerate() {
        if elem_ids.insert(g.id.as_str(), ()).is_some() {
            rep.push(format!("generators[{i}].id"), format!("duplicate element id `{}`", g.id));
        }
        if !bus_ids.contains_key(g.bus.as_str()) {
            rep.push(
                format!("generators[{i}].bus"),
                format!("generator `{}` references unknown bus `{}`", g.id, g.bus),
            );
        }
        check_real(&mut rep, format!("generators[{i}].capacity"), g.capacity, true);
        check_real(&mut rep, format!("generators[{i}].invest_cost"), g.invest_cost, false);
        check_real(&mut rep, format!("generators[{i}].marginal_cost"), g.marginal_cost, false);
    }
    for (i, l) in sys.lines.iter().enumerate() {
        if elem_ids.insert(l.id.as_str(), ()).is_some() {
            rep.push(format!("lines[{i}].id"), format!("duplicate element id `{}`", l.id));
        }
        for (field, bus) in [("from", &l.from), ("to", &l.to)] {
            if !bus_ids.contains_key(bus.as_str()) {
                rep.push(
                    format!("lines[{i}].{field}"),
                    format!("line `{}` references unknown bus `{bus}`", l.id),
                );
            }
        }
        if l.from == l.to {
            rep.push(format!("lines[{i}]"), format!("line `{}` starts and ends at the same bus", l.id));
        }
        check_real(&mut rep, format!("lines[{i}].susceptance"), l.susceptance, true);
        check_real(&mut rep, format!("lines[{i}].capacity"), l.capacity, true);
        check_real(&mut rep, format!("lines[{i}].invest_cost"), l.invest_cost, false);
    }
    if sys.num_elements() == 0 {
        rep.push("generators", "the system has no generators or lines");
    }
    check_real(&mut rep, "sigma".into(), sys.sigma, false);
    check_real(&mut rep, "theta_bound".into(), sys.theta_bound, true);
    let d = total_demand(sys);
    if d.is_finite() && d <= 0.0 {
        rep.push("buses", "total demand must be positive");
    }
    rep
}

/// Checks the policy against a system with `n` elements.
pub fn validate_policy(policy: &NkEpsilonPolicy, n: usize) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if policy.k > n {
        rep.push("policy.k", format!("k = {} exceeds the number of elements {n}", policy.k));
    }
    if policy.epsilon.len() != policy.k + 1 {
        rep.push(
            "policy.epsilon",
            format!(
                "epsilon length is {} but k + 1 = {}",
                policy.epsilon.len(),
                policy.k + 1
            ),
        );
    }
    for (j, &e) in policy.epsilon.iter().enumerate() {
        if !e.is_finite() || !(0.0..1.0).contains(&e) {
            rep.push(format!("policy.epsilon[{j}]"), "must lie in [0, 1)");
        }
    }
    if let Some(&e0) = policy.epsilon.first() {
        if e0 != 0.0 {
            rep.push("policy.epsilon[0]", "no shedding is allowed without failures");
        }
    }
    if policy.k >= 1 && policy.epsilon.len() > 1 && policy.epsilon[1] != 0.0 {
        rep.push("policy.epsilon[1]", "no shedding is allowed for single failures");
    }
    for j in 1..policy.epsilon.len() {
        if policy.epsilon[j] < policy.epsilon[j - 1] {
            rep.push(format!("policy.epsilon[{j}]"), format!("epsilon not nondecreasing at j={j}"));
        }
    }
    rep
}

pub fn validate_system(sys: &PowerSystem, policy: &NkEpsilonPolicy) -> ValidationReport {
    let mut rep = validate_network(sys);
    rep.violations
        .extend(validate_policy(policy, sys.num_elements()).violations);
    rep
}

/// A generator or line, by index into the system's own vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    Generator(usize),
    Line(usize),
}

/// Validated, indexed view of a [`PowerSystem`].
#[derive(Debug, Clone)]
pub struct Grid {
    sys: PowerSystem,
    bus_index: HashMap<String, usize>,
    gen_bus: Vec<usize>,
    line_from: Vec<usize>,
    line_to: Vec<usize>,
    elements: Vec<Element>,
    gen_pos: Vec<usize>,
    line_pos: Vec<usize>,
    element_index: HashMap<String, usize>,
    big_m: Vec<f64>,
    demand: f64,
}

impl Grid {
    pub fn new(sys: PowerSystem) -> Result<Self> {
        validate_network(&sys).into_result()?;
        let bus_index: HashMap<String, usize> =
            sys.buses.iter().enumerate().map(|(i, b)| (b.id.clone(), i)).collect();
        let gen_bus = sys.generators.iter().map(|g| bus_index[&g.bus]).collect();
        let line_from = sys.lines.iter().map(|l| bus_index[&l.from]).collect();
        let line_to = sys.lines.iter().map(|l| bus_index[&l.to]).collect();

        let mut elements: Vec<Element> = (0..sys.generators.len())
            .map(Element::Generator)
            .chain((0..sys.lines.len()).map(Element::Line))
            .collect();
        let id_of = |e: &Element| -> &str {
            match *e {
                Element::Generator(g) => &sys.generators[g].id,
                Element::Line(l) => &sys.lines[l].id,
            }
        };
        elements.sort_by(|a, b| id_of(a).cmp(id_of(b)));
        let mut gen_pos = vec![0; sys.generators.len()];
        let mut line_pos = vec![0; sys.lines.len()];
        let mut element_index = HashMap::new();
        for (u, e) in elements.iter().enumerate() {
            match *e {
                Element::Generator(g) => gen_pos[g] = u,
                Element::Line(l) => line_pos[l] = u,
            }
            element_index.insert(id_of(e).to_string(), u);
        }
        let big_m = sys
            .lines
            .iter()
            .map(|l| 2.0 * l.susceptance * sys.theta_bound + l.capacity)
            .collect();
        let demand = total_demand(&sys);
        Ok(Self {
            sys,
            bus_index,
            gen_bus,
            line_from,
            line_to,
            elements,
            gen_pos,
            line_pos,
            element_index,
            big_m,
            demand,
        })
    }

    pub fn system(&self) -> &PowerSystem {
        &self.sys
    }

    pub fn num_buses(&self) -> usize {
        self.sys.buses.len()
    }

    pub fn num_generators(&self) -> usize {
        self.sys.generators.len()
    }

    pub fn num_lines(&self) -> usize {
        self.sys.lines.len()
    }

    /// N = |G| + |E|.
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn total_demand(&self) -> f64 {
        self.demand
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn gen_bus(&self, g: usize) -> usize {
        self.gen_bus[g]
    }

    pub fn line_from(&self, l: usize) -> usize {
        self.line_from[l]
    }

    pub fn line_to(&self, l: usize) -> usize {
        self.line_to[l]
    }

    /// Element at universe position `u`.
    pub fn element(&self, u: usize) -> Element {
        self.elements[u]
    }

    pub fn gen_position(&self, g: usize) -> usize {
        self.gen_pos[g]
    }

    pub fn line_position(&self, l: usize) -> usize {
        self.line_pos[l]
    }

    pub fn element_id(&self, u: usize) -> &str {
        match self.elements[u] {
            Element::Generator(g) => &self.sys.generators[g].id,
            Element::Line(l) => &self.sys.lines[l].id,
        }
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.element_index.get(id).copied()
    }

    /// Big-M constant of line `l`: `2 B Θ + F`.
    pub fn big_m(&self, l: usize) -> f64 {
        self.big_m[l]
    }

    pub fn max_big_m(&self) -> f64 {
        self.big_m.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_existing(&self, u: usize) -> bool {
        match self.elements[u] {
            Element::Generator(g) => self.sys.generators[g].existing,
            Element::Line(l) => self.sys.lines[l].existing,
        }
    }

    /// Investment cost charged when the element is built (zero for existing).
    pub fn invest_cost(&self, u: usize) -> f64 {
        if self.is_existing(u) {
            return 0.0;
        }
        match self.elements[u] {
            Element::Generator(g) => self.sys.generators[g].invest_cost,
            Element::Line(l) => self.sys.lines[l].invest_cost,
        }
    }

    /// Build vector with only the existing elements.
    pub fn existing_build(&self) -> Vec<bool> {
        (0..self.num_elements()).map(|u| self.is_existing(u)).collect()
    }

    pub fn all_built(&self) -> Vec<bool> {
        vec![true; self.num_elements()]
    }
}

/// A set of failed elements, stored as sorted universe positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Contingency {
    failed: Vec<usize>,
}

impl Contingency {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_positions(mut failed: Vec<usize>) -> Self {
        failed.sort_unstable();
        failed.dedup();
        Self { failed }
    }

    pub fn from_ids<S: AsRef<str>>(grid: &Grid, ids: &[S]) -> Result<Self> {
        let mut failed = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            failed.push(grid.position_of(id).ok_or_else(|| CoreError::UnknownElement(id.to_string()))?);
        }
        Ok(Self::from_positions(failed))
    }

    /// Characteristic vector d̃ over the universe of `n` elements.
    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut d = vec![false; n];
        for &u in &self.failed {
            d[u] = true;
        }
        d
    }

    pub fn from_indicator(d: &[bool]) -> Self {
        Self {
            failed: d.iter().enumerate().filter(|(_, f)| **f).map(|(u, _)| u).collect(),
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.failed
    }

    pub fn size(&self) -> usize {
        self.failed.len()
    }

    pub fn contains(&self, u: usize) -> bool {
        self.failed.binary_search(&u).is_ok()
    }

    pub fn ids(&self, grid: &Grid) -> Vec<String> {
        self.failed.iter().map(|&u| grid.element_id(u).to_string()).collect()
    }
}

/// Available capacities under a plan and a contingency.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCapacity {
    pub lines: Vec<f64>,
    pub generators: Vec<f64>,
}

/// `F_e x_e (1 - d_e)` and `P̄_g x_g (1 - d_g)` for every element.
pub fn effective_capacity(grid: &Grid, build: &[bool], cont: &Contingency) -> EffectiveCapacity {
    let sys = grid.system();
    let avail = |u: usize| build[u] && !cont.contains(u);
    EffectiveCapacity {
        lines: (0..grid.num_lines())
            .map(|l| if avail(grid.line_position(l)) { sys.lines[l].capacity } else { 0.0 })
            .collect(),
        generators: (0..grid.num_generators())
            .map(|g| if avail(grid.gen_position(g)) { sys.generators[g].capacity } else { 0.0 })
            .collect(),
    }
}

/// No-contingency operating point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dispatch {
    pub flows: BTreeMap<String, f64>,
    pub outputs: BTreeMap<String, f64>,
    pub angles: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionPlan {
    /// Element id to build decision (0 or 1).
    pub build: BTreeMap<String, u8>,
    pub dispatch0: Dispatch,
    pub invest_cost: f64,
    pub operating_cost: f64,
    pub total_objective: f64,
}

impl ExpansionPlan {
    /// Plan from a build vector, costs evaluated on `grid`; the dispatch is
    /// left empty.
    pub fn from_build(grid: &Grid, build: &[bool]) -> Self {
        let map = (0..grid.num_elements())
            .map(|u| (grid.element_id(u).to_string(), u8::from(build[u])))
            .collect();
        let invest = (0..grid.num_elements())
            .filter(|&u| build[u])
            .map(|u| grid.invest_cost(u))
            .sum();
        Self {
            build: map,
            dispatch0: Dispatch::default(),
            invest_cost: invest,
            operating_cost: 0.0,
            total_objective: invest,
        }
    }

    /// Build vector over the grid's universe. Every element must be listed,
    /// nothing else may be, and existing elements must be built.
    pub fn build_vector(&self, grid: &Grid) -> Result<Vec<bool>> {
        let mut rep = ValidationReport::default();
        let mut x = vec![false; grid.num_elements()];
        let mut seen = vec![false; grid.num_elements()];
        for (id, &b) in &self.build {
            match grid.position_of(id) {
                None => rep.push(format!("build.{id}"), "unknown element id"),
                Some(u) => {
                    if b > 1 {
                        rep.push(format!("build.{id}"), "build decision must be 0 or 1");
                    }
                    x[u] = b == 1;
                    seen[u] = true;
                }
            }
        }
        for u in 0..grid.num_elements() {
            if !seen[u] && !grid.is_existing(u) {
                rep.push(format!("build.{}", grid.element_id(u)), "missing build decision");
            } else if !seen[u] {
                x[u] = true;
            }
            if grid.is_existing(u) && !x[u] {
                rep.push(format!("build.{}", grid.element_id(u)), "existing element must be built");
            }
        }
        rep.into_result()?;
        Ok(x)
    }

    pub fn built_ids(&self) -> Vec<&str> {
        self.build.iter().filter(|(_, b)| **b == 1).map(|(id, _)| id.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus() -> PowerSystem {
        PowerSystem {
            buses: vec![
                Bus { id: "A".into(), demand: 100.0 },
                Bus { id: "B".into(), demand: 0.0 },
            ],
            generators: vec![Generator {
                id: "gB".into(),
                bus: "B".into(),
                capacity: 150.0,
                invest_cost: 0.0,
                marginal_cost: 1.0,
                existing: true,
            }],
            lines: vec![Line {
                id: "lBA".into(),
                from: "B".into(),
                to: "A".into(),
                susceptance: 10.0,
                capacity: 80.0,
                invest_cost: 0.0,
                existing: true,
            }],
            sigma: 1.0,
            theta_bound: std::f64::consts::PI,
        }
    }

    #[test]
    fn well_formed_system_has_empty_report() {
        let rep = validate_system(&two_bus(), &NkEpsilonPolicy::new(1, vec![0.0, 0.0]));
        assert!(rep.is_empty(), "{rep}");
    }

    #[test]
    fn decreasing_epsilon_is_reported() {
        let mut sys = two_bus();
        sys.generators.push(Generator {
            id: "gA".into(),
            bus: "A".into(),
            capacity: 50.0,
            invest_cost: 0.0,
            marginal_cost: 1.0,
            existing: true,
        });
        let rep = validate_system(&sys, &NkEpsilonPolicy::new(2, vec![0.0, 0.05, 0.02]));
        assert!(rep.violations.iter().any(|v| v.message == "epsilon not nondecreasing at j=2"));
    }

    #[test]
    fn unknown_bus_names_the_generator() {
        let mut sys = two_bus();
        sys.generators[0].bus = "Z".into();
        let rep = validate_network(&sys);
        assert_eq!(rep.violations.len(), 1);
        assert!(rep.violations[0].message.contains("`gB`"));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut sys = two_bus();
        sys.lines[0].susceptance = -1.0;
        let p = NkEpsilonPolicy::new(3, vec![0.0]);
        assert_eq!(validate_system(&sys, &p), validate_system(&sys, &p));
    }

    #[test]
    fn total_demand_sums_buses() {
        let mut sys = two_bus();
        sys.buses.push(Bus { id: "C".into(), demand: 50.0 });
        assert_eq!(total_demand(&sys), 150.0);
        sys.buses = vec![Bus { id: "A".into(), demand: 0.0 }];
        assert_eq!(total_demand(&sys), 0.0);
        assert!(!validate_network(&sys).is_empty());
    }

    #[test]
    fn effective_capacity_cases() {
        let grid = Grid::new(two_bus()).unwrap();
        let l = grid.position_of("lBA").unwrap();
        let none = Contingency::empty();
        let failed = Contingency::from_positions(vec![l]);
        assert_eq!(effective_capacity(&grid, &[true, true], &none).lines, vec![80.0]);
        assert_eq!(effective_capacity(&grid, &[true, true], &failed).lines, vec![0.0]);
        let mut x = vec![true, true];
        x[l] = false;
        assert_eq!(effective_capacity(&grid, &x, &none).lines, vec![0.0]);
    }

    #[test]
    fn universe_is_sorted_by_id() {
        let grid = Grid::new(two_bus()).unwrap();
        assert_eq!(grid.element_id(0), "gB");
        assert_eq!(grid.element_id(1), "lBA");
        assert_eq!(grid.big_m(0), 2.0 * 10.0 * std::f64::consts::PI + 80.0);
    }

    #[test]
    fn plan_cross_validation_rejects_unknown_ids() {
        let grid = Grid::new(two_bus()).unwrap();
        let mut plan = ExpansionPlan::from_build(&grid, &[true, true]);
        assert!(plan.build_vector(&grid).is_ok());
        plan.build.insert("ghost".into(), 1);
        assert!(plan.build_vector(&grid).is_err());
    }

    proptest::proptest! {
        #[test]
        fn indicator_round_trip(bits in proptest::collection::vec(proptest::bool::ANY, 0..40)) {
            let c = Contingency::from_indicator(&bits);
            proptest::prop_assert_eq!(c.indicator(bits.len()), bits.clone());
            proptest::prop_assert_eq!(Contingency::from_positions(c.positions().to_vec()), c);
        }

        #[test]
        fn effective_capacity_within_nameplate(
            build in proptest::collection::vec(proptest::bool::ANY, 2),
            fail in proptest::collection::vec(proptest::bool::ANY, 2),
        ) {
            let grid = Grid::new(two_bus()).unwrap();
            let cap = effective_capacity(&grid, &build, &Contingency::from_indicator(&fail));
            proptest::prop_assert!(cap.lines[0] >= 0.0 && cap.lines[0] <= 80.0);
            proptest::prop_assert!(cap.generators[0] >= 0.0 && cap.generators[0] <= 150.0);
        }
    }
}
