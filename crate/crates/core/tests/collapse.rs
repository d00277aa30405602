mod common;

use std::f64::consts::PI;

use common::{q, targets};
use gaugesim_core::catalog::{self, fixtures};
use gaugesim_core::collapse::{
    chi_square_homogeneity, find_min_steps, multi_step_run, one_step_run, simulate, CollapseError, CollapsePlan,
    CompiledPlan, EmpiricalTable, Forcing, TraceStep,
};
use gaugesim_core::gauge::{solve_all_gauges, IgnitionIndex};
use gaugesim_core::scalar::Rational;
use gaugesim_core::system::{default_labels, ProbabilitySystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn pr_box_forced_draw() {
    let sys = catalog::pr_box();
    let gauges = fixtures::pr_box_gauges();
    let forcing = Forcing { gamma: Some(0), ignition: Some(IgnitionIndex(0)) };
    let (x, trace) = one_step_run(&sys, &gauges, &[0, 0], &mut rng(1), &forcing).unwrap();
    assert_eq!(x, vec![0, 0]);
    assert_eq!(trace.final_ignition(), Some(IgnitionIndex(0)));
}

#[test]
fn forced_index_must_carry_weight() {
    let sys = catalog::pr_box();
    let gauges = fixtures::pr_box_gauges();
    let forcing = Forcing { gamma: Some(0), ignition: Some(IgnitionIndex(6)) };
    let err = one_step_run(&sys, &gauges, &[0, 0], &mut rng(1), &forcing).unwrap_err();
    assert!(matches!(err, CollapseError::ForcedIndexOutsideSupport { .. }), "{err:?}");
    // γ = 3 is region 1 at setting 1; incompatible with u1 = 0.
    let forcing = Forcing { gamma: Some(3), ignition: None };
    let err = one_step_run(&sys, &gauges, &[0, 0], &mut rng(1), &forcing).unwrap_err();
    assert!(matches!(err, CollapseError::IncompatibleGauge { .. }), "{err:?}");
}

#[test]
fn singlet_outcomes_always_differ_at_equal_settings() {
    let sys = catalog::singlet();
    let gauges = solve_all_gauges(&sys, None).unwrap();
    let mut r = rng(9);
    for s in 0..3 {
        for _ in 0..200 {
            let (x, trace) = one_step_run(&sys, &gauges, &[s, s], &mut r, &Forcing::default()).unwrap();
            assert_ne!(x[0], x[1]);
            assert!([7, 28, 42, 49].contains(&trace.final_ignition().unwrap().0));
        }
    }
}

#[test]
fn deterministic_region_always_gives_zero() {
    let sys = catalog::one_region(&[q(1, 1)]).unwrap();
    let plan = CompiledPlan::compile(&sys, &CollapsePlan::one_step()).unwrap();
    let mut r = rng(3);
    for _ in 0..100 {
        assert_eq!(plan.run(&[0], &mut r, &Forcing::default()).unwrap().0, vec![0]);
    }
    let table = simulate(&plan, &[0], 1000, 5, &Forcing::default()).unwrap();
    assert_eq!(table.tv_distance(&sys, &[0]), Some(0.0));
}

fn leading_outcome(trace: &gaugesim_core::collapse::CollapseTrace) -> Option<(usize, u8, String)> {
    trace.steps.iter().find_map(|s| match s {
        TraceStep::Leading { region, outcome, branch, .. } => Some((*region, *outcome, branch.clone())),
        TraceStep::Final { .. } => None,
    })
}

#[test]
fn super_ghz_two_step_branch_is_a_pr_box() {
    let sys = catalog::super_ghz();
    let plan: CollapsePlan = "2,final".parse().unwrap();
    let compiled = CompiledPlan::compile(&sys, &plan).unwrap();
    let cert = compiled.certificate();
    let branch = cert.iter().find(|b| b.branch == "r2@0=0").unwrap();
    let expected = sys.condition(2, 0, 0).unwrap().system;
    assert_eq!(branch.system, expected);
    // A PR-box up to relabelling: CHSH 4.
    assert!((common::chsh_brute(&branch.system) - 4.0).abs() < 1e-12);

    let mut seen_zero = false;
    for seed in 0..64 {
        let (x, trace) = multi_step_run(&sys, &plan, &[0, 1, 0], &mut rng(seed)).unwrap();
        let (region, outcome, _) = leading_outcome(&trace).unwrap();
        assert_eq!(region, 2);
        assert_eq!(x[2], outcome);
        if outcome == 0 {
            seen_zero = true;
            match trace.steps.last().unwrap() {
                TraceStep::Final { branch, .. } => assert_eq!(branch, "r2@0=0"),
                other => panic!("{other:?}"),
            }
        }
    }
    assert!(seen_zero);
}

#[test]
fn ghz_two_step_branch_is_phi_plus() {
    let sys = catalog::ghz_xy();
    let compiled = CompiledPlan::compile(&sys, &"2,final".parse().unwrap()).unwrap();
    let branch = compiled.certificate().into_iter().find(|b| b.branch == "r2@0=0").unwrap();
    let s = &branch.system;
    assert_eq!(s.p(&[0, 0], &[0, 0]), &q(1, 2));
    assert_eq!(s.p(&[1, 1], &[0, 0]), &q(1, 2));
    assert_eq!(s.p(&[0, 1], &[0, 0]), &q(0, 1));
}

#[test]
fn one_region_plan_reduces_to_one_step() {
    let sys = catalog::one_region(&[q(1, 3), q(3, 4)]).unwrap();
    let gauges = solve_all_gauges(&sys, None).unwrap();
    for seed in 0..20 {
        let a = multi_step_run(&sys, &CollapsePlan::one_step(), &[1], &mut rng(seed)).unwrap();
        let b = one_step_run(&sys, &gauges, &[1], &mut rng(seed), &Forcing::default()).unwrap();
        assert_eq!(a.0, b.0);
    }
}

#[test]
fn infeasible_plan_names_the_branch() {
    let err = CompiledPlan::compile(&catalog::super_ghz(), &CollapsePlan::one_step()).unwrap_err();
    assert!(matches!(err, CollapseError::InfeasibleBranch { step: 1, .. }), "{err:?}");
}

#[test]
fn minimum_steps() {
    let sg = find_min_steps(&catalog::super_ghz()).unwrap();
    assert_eq!(sg.steps, 2);
    assert_eq!(sg.plan.len(), 2);
    assert!(sg.compiled.product_law().exact);

    assert_eq!(find_min_steps(&catalog::quasi_super_ghz(q(1, 8)).unwrap()).unwrap().steps, 1);
    assert_eq!(find_min_steps(&catalog::pr_box()).unwrap().steps, 1);
    for sys in [catalog::ghz_xy(), catalog::w_xy(), catalog::singlet()] {
        let m = find_min_steps(&sys).unwrap().steps;
        assert!(m >= 1 && m <= sys.n());
    }
}

#[test]
fn three_setting_epr_simulation() {
    let sys = catalog::epr_b(&[0.0, PI / 5.0, PI / 2.0]).unwrap();
    let plan = CompiledPlan::compile(&sys, &CollapsePlan::one_step()).unwrap();
    let table = simulate(&plan, &[0, 2], 100_000, 7, &Forcing::default()).unwrap();
    assert_eq!(table.runs(&[0, 2]), 100_000);
    assert!(table.tv_distance(&sys, &[0, 2]).unwrap() < 0.01);
}

#[test]
fn pr_box_gauge_choice_is_invisible() {
    let sys = catalog::pr_box();
    let plan = CompiledPlan::compile(&sys, &CollapsePlan::one_step()).unwrap();
    let u = [0, 1];
    for gamma in [0, 3] {
        let forcing = Forcing { gamma: Some(gamma), ignition: None };
        let table = simulate(&plan, &u, 100_000, 11, &forcing).unwrap();
        assert!(table.tv_distance(&sys, &u).unwrap() < 0.01, "gamma {gamma}");
    }
}

#[test]
fn seeded_runs_replay() {
    let sys = catalog::super_ghz();
    let plan = CompiledPlan::compile(&sys, &"2,final".parse().unwrap()).unwrap();
    for seed in 0..20 {
        let (x, trace) = plan.run_seeded(&[1, 0, 1], seed, &Forcing::default()).unwrap();
        let (x2, trace2) = plan.run_seeded(&[1, 0, 1], seed, &Forcing::default()).unwrap();
        assert_eq!((x.clone(), &trace), (x2, &trace2));
        let replayed = plan.replay(&trace, &Forcing::default()).unwrap();
        assert_eq!(replayed, trace);
        assert_eq!(replayed.x, x);
    }
    let a = simulate(&plan, &[1, 1, 0], 10_000, 42, &Forcing::default()).unwrap();
    let b = simulate(&plan, &[1, 1, 0], 10_000, 42, &Forcing::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn region_zero_marginal_ignores_the_far_setting() {
    let sys = catalog::epr_b(&[0.0, PI / 5.0, PI / 2.0]).unwrap();
    let plan = CompiledPlan::compile(&sys, &CollapsePlan::one_step()).unwrap();
    let rows: Vec<Vec<u64>> = (0..3)
        .map(|u1| {
            let t = simulate(&plan, &[0, u1], 50_000, 100 + u1 as u64, &Forcing::default()).unwrap();
            t.region_counts(&[0, u1], 0).unwrap().to_vec()
        })
        .collect();
    assert!(chi_square_homogeneity(&rows).passes(0.01));
}

#[test]
fn counts_sum_to_runs_and_merge_commutes() {
    let sys = catalog::w_xy();
    let plan = CompiledPlan::compile(&sys, &CollapsePlan::one_step()).unwrap();
    let a = simulate(&plan, &[0, 1, 0], 5_000, 1, &Forcing::default()).unwrap();
    let b = simulate(&plan, &[1, 1, 1], 3_000, 2, &Forcing::default()).unwrap();
    let c = simulate(&plan, &[0, 1, 0], 2_000, 3, &Forcing::default()).unwrap();
    assert_eq!(a.counts(&[0, 1, 0]).unwrap().iter().sum::<u64>(), 5_000);

    let mut ab_c = a.clone();
    ab_c.merge(&b);
    ab_c.merge(&c);
    let mut bc = b.clone();
    bc.merge(&c);
    let mut a_bc = a.clone();
    a_bc.merge(&bc);
    let mut cba = c.clone();
    cba.merge(&b);
    cba.merge(&a);
    assert_eq!(ab_c, a_bc);
    assert_eq!(ab_c, cba);
    assert_eq!(ab_c.runs(&[0, 1, 0]), 7_000);
    assert_eq!(ab_c.total_runs(), 10_000);
}

#[test]
fn product_law_holds_on_every_plan() {
    let systems: Vec<ProbabilitySystem<Rational>> = vec![catalog::ghz_xy(), catalog::w_xy(), catalog::super_ghz()];
    for sys in systems {
        for lead in [vec![2], vec![0], vec![2, 1], vec![0, 2]] {
            let plan = CollapsePlan::leading(&lead).unwrap();
            let compiled = CompiledPlan::compile(&sys, &plan).unwrap();
            let law = compiled.product_law();
            assert!(law.exact && law.max_deviation == 0.0, "{plan} {law:?}");
            assert!(law.checked >= targets(3, 2).len());
        }
    }
}

#[test]
fn empirical_table_rejects_nothing_it_did_not_see() {
    let t = EmpiricalTable::new(2, 2);
    assert_eq!(t.counts(&[0, 0]), None);
    assert_eq!(t.total_runs(), 0);
    let sys = ProbabilitySystem::from_fn(2, 2, default_labels(2), |_, _| q(1, 4)).unwrap();
    assert_eq!(t.tv_distance(&sys, &[0, 0]), None);
}
