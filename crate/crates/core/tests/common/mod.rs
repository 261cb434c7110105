#![allow(dead_code)]

use std::path::PathBuf;

use nkeps_core::case_io::{read_case, Case};
use nkeps_core::{Bus, Generator, Grid, Line, PowerSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cases_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

pub fn shipped(name: &str) -> Case {
    read_case(&cases_dir().join(format!("{name}.json"))).unwrap()
}

/// Shipped cases small enough for every method.
pub const SMALL_CASES: [&str; 13] = [
    "twobus_candidate",
    "radial4_n1",
    "radial4_n2",
    "mesh5_n1",
    "mesh5_n2",
    "star5_n2",
    "mesh6_n1",
    "mesh6_n2",
    "tree6_n2",
    "mesh7_n1",
    "mesh7_n2",
    "mesh8_n1",
    "mesh8_n2",
];

pub fn bus(id: &str, demand: f64) -> Bus {
    Bus { id: id.into(), demand }
}

pub fn generator(id: &str, bus: &str, capacity: f64, invest_cost: f64, existing: bool) -> Generator {
    Generator {
        id: id.into(),
        bus: bus.into(),
        capacity,
        invest_cost: if existing { 0.0 } else { invest_cost },
        marginal_cost: 1.0,
        existing,
    }
}

pub fn line(id: &str, from: &str, to: &str, capacity: f64, invest_cost: f64, existing: bool) -> Line {
    Line {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        susceptance: 100.0,
        capacity,
        invest_cost: if existing { 0.0 } else { invest_cost },
        existing,
    }
}

/// Gens 150@B and 50@A, one 80 MW line B->A, 100 MW demand at A.
pub fn two_bus() -> Grid {
    Grid::new(PowerSystem {
        buses: vec![bus("A", 100.0), bus("B", 0.0)],
        generators: vec![generator("gA", "A", 50.0, 0.0, true), generator("gB", "B", 150.0, 0.0, true)],
        lines: vec![line("lBA", "B", "A", 80.0, 0.0, true)],
        sigma: 0.01,
        theta_bound: std::f64::consts::PI,
    })
    .unwrap()
}

/// Random connected system with at most `max_buses` buses and `max_elements`
/// generators plus lines. Line capacity over susceptance stays at most 0.3
/// and the angle bound is 0.6, so angle limits never bind alone.
pub fn random_system(rng: &mut ChaCha8Rng, max_buses: usize, max_elements: usize) -> Grid {
    let n = rng.gen_range(2..=max_buses);
    let ids: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
    let mut buses: Vec<Bus> = ids.iter().map(|i| bus(i, 0.0)).collect();
    for b in buses.iter_mut() {
        if rng.gen_bool(0.6) {
            b.demand = f64::from(rng.gen_range(5..40));
        }
    }
    if buses.iter().all(|b| b.demand == 0.0) {
        buses[0].demand = 20.0;
    }
    let d: f64 = buses.iter().map(|b| b.demand).sum();

    let mut lines = Vec::new();
    let budget = max_elements.max(n + 1);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        lines.push((ids[j].clone(), ids[i].clone()));
    }
    let mut gens = Vec::new();
    let ng = rng.gen_range(1..=3.min(budget - lines.len()));
    for _ in 0..ng {
        gens.push(ids[rng.gen_range(0..n)].clone());
    }
    while lines.len() + gens.len() < budget && rng.gen_bool(0.7) {
        if rng.gen_bool(0.5) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                lines.push((ids[a].clone(), ids[b].clone()));
            }
        } else {
            gens.push(ids[rng.gen_range(0..n)].clone());
        }
    }

    let generators = gens
        .iter()
        .enumerate()
        .map(|(g, at)| {
            let cap = (rng.gen_range(0.3..1.2) * d).round().max(1.0);
            generator(&format!("g{g}"), at, cap, f64::from(rng.gen_range(10..100)), rng.gen_bool(0.5))
        })
        .collect();
    let lines = lines
        .iter()
        .enumerate()
        .map(|(l, (a, b))| {
            let cap = (rng.gen_range(0.2..1.0) * d).round().max(1.0);
            let mut ln = line(&format!("l{l}"), a, b, cap, f64::from(rng.gen_range(10..100)), rng.gen_bool(0.5));
            ln.susceptance = cap / rng.gen_range(0.05..0.3);
            ln
        })
        .collect();
    Grid::new(PowerSystem {
        buses,
        generators,
        lines,
        sigma: 0.01,
        theta_bound: 0.6,
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_build(rng: &mut ChaCha8Rng, grid: &Grid) -> Vec<bool> {
    (0..grid.num_elements()).map(|u| grid.is_existing(u) || rng.gen_bool(0.5)).collect()
}

/// Every subset of `0..n` of size `j`, lexicographic.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for u in start..n {
            cur.push(u);
            rec(u + 1, n, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, j, &mut Vec::new(), &mut out);
    out
}
