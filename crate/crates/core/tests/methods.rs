mod common;

use common::*;
use nkeps_core::case_io::plan_to_string;
use nkeps_core::dcopf_subproblem::{cut_from_dual, dual_objective, min_loss_of_load};
use nkeps_core::psip_oracle::worst_case_contingency;
use nkeps_core::verify::{brute_force_worst, check_plan_compliance, CheckMode};
use nkeps_core::{solve, Contingency, Grid, Method, NkEpsilonPolicy, PlannerOptions, RunRecord, RunStatus};
use proptest::prelude::*;
use rand::Rng;

fn random_policy(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> NkEpsilonPolicy {
    let k = rng.gen_range(1..=2.min(n));
    let mut eps = vec![0.0, 0.0];
    if k == 2 {
        eps.push([0.1, 0.3, 0.5][rng.gen_range(0..3)]);
    }
    NkEpsilonPolicy::new(k, eps)
}

fn cuts_are_valid(rec: &RunRecord, tol: f64) {
    let x = rec.plan.as_ref().map(|p| p.build.values().map(|b| *b == 1).collect::<Vec<_>>());
    for cut in &rec.cuts {
        assert!(cut.violation_at_source > 0.0);
        if let Some(x) = &x {
            assert!(cut.is_satisfied(x, tol), "final plan violates a cut by {}", cut.lhs(x) - cut.rhs);
        }
    }
}

/// Two buses joined by a strong 9 MW line and a weak 100 MW line. With both
/// in service Kirchhoff's law caps the weak line near 9 MW / 20; losing the
/// strong line frees the weak one to carry the whole load.
#[test]
fn failing_a_line_can_reduce_shed() {
    let mut strong = line("strong", "B", "A", 9.0, 0.0, true);
    strong.susceptance = 2000.0;
    let mut weak = line("weak", "B", "A", 100.0, 0.0, true);
    weak.susceptance = 200.0;
    let grid = Grid::new(nkeps_core::PowerSystem {
        buses: vec![bus("A", 50.0), bus("B", 0.0)],
        generators: vec![generator("g", "B", 100.0, 0.0, true)],
        lines: vec![strong, weak],
        sigma: 1.0,
        theta_bound: 1.0,
    })
    .unwrap();
    let x = grid.all_built();
    let intact = min_loss_of_load(&grid, &x, &Contingency::empty()).unwrap().z;
    let lost = min_loss_of_load(&grid, &x, &Contingency::from_ids(&grid, &["strong"]).unwrap()).unwrap().z;
    // Flows split 10:1, so the strong line saturates at a total of 9.9 MW.
    assert!((intact - (50.0 - 9.9)).abs() < 1e-6, "{intact}");
    assert!(lost.abs() < 1e-6, "{lost}");
}

#[test]
fn methods_agree_on_random_systems() {
    let mut rng = rng(7);
    let opts = PlannerOptions::default();
    let mut optimal = 0;
    for _ in 0..80 {
        if optimal == 12 {
            break;
        }
        let grid = random_system(&mut rng, 5, 10);
        let policy = random_policy(&mut rng, grid.num_elements());
        let recs: Vec<RunRecord> = [Method::Ef, Method::Bd, Method::Ocs]
            .into_iter()
            .map(|m| solve(m, &grid, &policy, &opts).unwrap())
            .collect();
        let status = recs[0].status;
        for r in &recs {
            assert_eq!(r.status, status, "{}", r.method);
            cuts_are_valid(r, 1e-6 * (1.0 + grid.total_demand()));
        }
        if status != RunStatus::Optimal {
            continue;
        }
        optimal += 1;
        let z0 = recs[0].objective().unwrap();
        for r in &recs {
            let z = r.objective().unwrap();
            assert!((z - z0).abs() <= 2.0 * opts.gap * z0.abs().max(1.0), "{}: {z} vs {z0}", r.method);
            let x = r.plan.as_ref().unwrap().build_vector(&grid).unwrap();
            let rep = check_plan_compliance(&grid, &policy, &x, CheckMode::Enumerate, 100_000, None).unwrap();
            assert!(rep.passed(), "{} plan fails at j = {}", r.method, rep.first_failure().unwrap().j);
        }
    }
    assert!(optimal >= 10, "only {optimal} optimal instances");
}

#[test]
fn repeated_solves_write_identical_plans() {
    for name in ["mesh6_n2", "star5_n2"] {
        let case = shipped(name);
        for m in [Method::Ef, Method::Bd, Method::Ocs] {
            let a = solve(m, &case.grid, &case.policy, &PlannerOptions::default()).unwrap();
            let b = solve(m, &case.grid, &case.policy, &PlannerOptions::default()).unwrap();
            assert_eq!(
                plan_to_string(a.plan.as_ref().unwrap()),
                plan_to_string(b.plan.as_ref().unwrap()),
                "{name} {m}"
            );
            assert_eq!(a.cuts, b.cuts);
        }
    }
}

#[test]
fn oracle_and_enumeration_checks_agree() {
    for name in SMALL_CASES {
        let case = shipped(name);
        let x = case.grid.all_built();
        let e = check_plan_compliance(&case.grid, &case.policy, &x, CheckMode::Enumerate, 100_000, None).unwrap();
        let o = check_plan_compliance(&case.grid, &case.policy, &x, CheckMode::Oracle, 100_000, None).unwrap();
        for (a, b) in e.checks.iter().zip(&o.checks) {
            assert!((a.worst_shed - b.worst_shed).abs() <= 1e-6 * (1.0 + case.grid.total_demand()), "{name}");
            assert_eq!(a.passed, b.passed);
        }
    }
}

#[test]
fn time_limit_is_reported() {
    let case = shipped("ieee30_augmented");
    let opts = PlannerOptions {
        time_limit: Some(std::time::Duration::from_millis(200)),
        ..PlannerOptions::default()
    };
    let rec = solve(Method::Ocs, &case.grid, &case.policy, &opts).unwrap();
    assert_eq!(rec.status, RunStatus::TimeLimit);
    assert!(rec.plan.is_none());
}

#[test]
fn cut_limit_is_reported() {
    let case = shipped("mesh6_n2");
    let opts = PlannerOptions {
        max_cuts: 1,
        ..PlannerOptions::default()
    };
    let rec = solve(Method::Bd, &case.grid, &case.policy, &opts).unwrap();
    assert_eq!(rec.status, RunStatus::CutLimit);
}

fn check_duality(grid: &Grid, x: &[bool], cont: &Contingency) {
    let out = min_loss_of_load(grid, x, cont).unwrap();
    let dual = dual_objective(grid, x, cont, &out.dual);
    assert!((dual - out.z).abs() <= 1e-6 * (1.0 + out.z), "primal {} dual {dual}", out.z);
    for v in out.dual.beta_hat.iter().chain(&out.dual.zeta).chain(&out.dual.lambda) {
        assert!(*v <= 0.0);
    }
    if out.z > 1e-6 * grid.total_demand() {
        let cut = cut_from_dual(grid, x, cont, &out, 0.0).unwrap();
        assert!((cut.lhs(x) - out.z).abs() <= 1e-6 * (1.0 + out.z));
        // The dual stays feasible for every plan, so the left side never
        // exceeds that plan's own loss of load.
        let all = grid.all_built();
        let z_all = min_loss_of_load(grid, &all, cont).unwrap().z;
        assert!(cut.lhs(&all) <= z_all + 1e-6 * (1.0 + z_all));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn loss_of_load_is_certified_by_its_dual(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let grid = random_system(&mut r, 8, 12);
        let x = random_build(&mut r, &grid);
        let n = grid.num_elements();
        let size = r.gen_range(0..=3.min(n));
        let mut failed: Vec<usize> = (0..n).collect();
        for i in 0..size {
            let j = r.gen_range(i..n);
            failed.swap(i, j);
        }
        failed.truncate(size);
        check_duality(&grid, &x, &Contingency::from_positions(failed));
    }

    #[test]
    fn shed_grows_when_generators_or_unbuilt_elements_fail(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let grid = random_system(&mut r, 6, 10);
        let x = random_build(&mut r, &grid);
        let n = grid.num_elements();
        let a = r.gen_range(0..n);
        let extra: Vec<usize> = (0..n)
            .filter(|&u| u != a && (!x[u] || matches!(grid.element(u), nkeps_core::network_model::Element::Generator(_))))
            .collect();
        prop_assume!(!extra.is_empty());
        let b = extra[r.gen_range(0..extra.len())];
        let z1 = min_loss_of_load(&grid, &x, &Contingency::from_positions(vec![a])).unwrap().z;
        let z2 = min_loss_of_load(&grid, &x, &Contingency::from_positions(vec![a, b])).unwrap().z;
        prop_assert!(z2 >= z1 - 1e-7 * (1.0 + grid.total_demand()));
    }

    #[test]
    fn oracle_matches_brute_force(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let grid = random_system(&mut r, 6, 9);
        let x = random_build(&mut r, &grid);
        let tol = 1e-6 * (1.0 + grid.total_demand());
        let mut prev = 0.0;
        for j in 1..=2.min(grid.num_elements()) {
            let (brute, _) = brute_force_worst(&grid, &x, j, 100_000).unwrap();
            let oracle = worst_case_contingency(&grid, &x, j, None, None).unwrap();
            prop_assert!((oracle.worst_shed - brute).abs() <= tol, "j={} oracle {} brute {}", j, oracle.worst_shed, brute);
            prop_assert!(brute >= prev - tol);
            prev = brute;
        }
    }
}
