mod common;

use common::{bits, q, settings};
use gaugesim_core::catalog::{self, build, entries, AnySystem, Params};
use gaugesim_core::collapse::{CollapsePlan, CompiledPlan};
use gaugesim_core::gauge::{solve_all_gauges, verify_consistency};
use gaugesim_core::metrics::{
    atom_measures, bell_triangle_slack, chsh_max, measurement_entropy, s2, SpinConvention,
};
use gaugesim_core::scalar::{Rational, Scalar};
use gaugesim_core::system::{default_labels, ModelError, ProbabilitySystem};
use proptest::prelude::*;

const CASES: u32 = 1000;

fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, ..ProptestConfig::default() }
}

/// Deterministic local strategy: bit `s + r*K` is region r's answer at setting s.
fn deterministic(n: usize, k: usize, strategy: u32) -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(n, k, default_labels(k), |x, u| {
        let hit = (0..n).all(|r| ((strategy >> (u[r] + r * k)) & 1) as u8 == x[r]);
        if hit { q(1, 1) } else { q(0, 1) }
    })
    .unwrap()
}

fn mixture(parts: &[(ProbabilitySystem<Rational>, u32)]) -> ProbabilitySystem<Rational> {
    let total: u32 = parts.iter().map(|(_, w)| w).sum();
    let (n, k) = (parts[0].0.n(), parts[0].0.k());
    ProbabilitySystem::from_fn(n, k, default_labels(k), |x, u| {
        parts
            .iter()
            .fold(q(0, 1), |acc, (s, w)| acc + s.p(x, u).clone() * q(*w as i64, total as i64))
    })
    .unwrap()
}

/// Locally consistent rational tables: mixtures of deterministic strategies,
/// optionally blended with a contextual system of the same shape.
fn consistent_system(max_n: usize, max_k: usize) -> impl Strategy<Value = ProbabilitySystem<Rational>> {
    (1..=max_n, 1..=max_k)
        .prop_flat_map(|(n, k)| {
            let strategies = prop::collection::vec((any::<u32>(), 1u32..8), 1..5);
            (Just(n), Just(k), strategies, 0u32..4)
        })
        .prop_map(|(n, k, strategies, contextual)| {
            let mut parts: Vec<_> = strategies.into_iter().map(|(s, w)| (deterministic(n, k, s), w)).collect();
            if contextual > 0 && k == 2 && n >= 2 {
                let extra = if n == 2 { catalog::pr_box() } else { catalog::super_ghz() };
                parts.push((extra, contextual));
            }
            mixture(&parts)
        })
}

fn coin_product(n: usize) -> impl Strategy<Value = ProbabilitySystem<f64>> {
    (2usize..=4).prop_flat_map(move |k| prop::collection::vec(prop::collection::vec(0.0f64..=1.0, k), n)).prop_map(
        |probs| {
            let k = probs[0].len();
            let parts: Vec<_> = probs
                .iter()
                .map(|p| {
                    ProbabilitySystem::from_fn(1, k, default_labels(k), |x, u| {
                        if x[0] == 0 { p[u[0]] } else { 1.0 - p[u[0]] }
                    })
                    .unwrap()
                })
                .collect();
            ProbabilitySystem::product(&parts).unwrap()
        },
    )
}

/// Mixtures of deterministic strategies where both regions share one
/// response function, so equal settings always give equal outcomes.
fn correlated_local() -> impl Strategy<Value = ProbabilitySystem<Rational>> {
    (2usize..=4)
        .prop_flat_map(|k| (Just(k), prop::collection::vec((any::<u32>(), 1u32..8), 1..6)))
        .prop_map(|(k, strategies)| {
            let parts: Vec<_> = strategies
                .into_iter()
                .map(|(s, w)| {
                    let shared = s & ((1 << k) - 1);
                    (deterministic(2, k, shared | (shared << k)), w)
                })
                .collect();
            mixture(&parts)
        })
}

fn entropy(sys: &ProbabilitySystem<Rational>, mask: usize, u: &[usize]) -> f64 {
    let regions: Vec<usize> = (0..sys.n()).filter(|r| mask >> r & 1 == 1).collect();
    if regions.is_empty() {
        return 0.0;
    }
    let settings: Vec<usize> = regions.iter().map(|&r| u[r]).collect();
    measurement_entropy(sys, &regions, &settings).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn solved_gauges_rebuild_every_target(sys in consistent_system(3, 2)) {
        // Contextual blends can be infeasible; only solved systems count.
        let Ok(set) = solve_all_gauges(&sys, None) else { return Ok(()) };
        prop_assert!(verify_consistency(&sys, &set).exact);
        let (n, k) = (sys.n(), sys.k());
        for gamma in 0..n * k {
            let d = set.get(gamma);
            let (region, setting) = (gamma / k, gamma % k);
            for ui in 0..sys.setting_count() {
                let u = settings(ui, n, k);
                if u[region] != setting {
                    continue;
                }
                let rebuilt = d.reconstruct(k, &u);
                for xm in 0..1usize << n {
                    prop_assert_eq!(&rebuilt[xm], sys.p(&bits(xm, n), &u));
                }
            }
        }
    }

    #[test]
    fn entropies_form_a_polymatroid(sys in consistent_system(3, 3), ui in any::<usize>()) {
        let n = sys.n();
        let u = settings(ui % sys.setting_count(), n, sys.k());
        let full = (1usize << n) - 1;
        let h: Vec<f64> = (0..=full).map(|m| entropy(&sys, m, &u)).collect();
        for a in 0..=full {
            for b in 0..=full {
                let (ha, hb, hu, hi) = (h[a], h[b], h[a | b], h[a & b]);
                if a & b == a {
                    prop_assert!(ha <= hb + 1e-9, "monotone {a} {b}");
                }
                prop_assert!(ha + hb + 1e-9 >= hu + hi, "submodular {a} {b}");
            }
        }
    }

    #[test]
    fn products_stay_within_the_classical_bound(sys in coin_product(2)) {
        let best = chsh_max(&sys, SpinConvention::Uniform).unwrap().unwrap();
        prop_assert!(best.value <= 2.0 + 1e-9, "{}", best.value);
    }

    #[test]
    fn correlated_local_systems_keep_triangle_slack(sys in correlated_local()) {
        prop_assert!(sys.is_totally_correlated().unwrap());
        prop_assert!(chsh_max(&sys, SpinConvention::Uniform).unwrap().unwrap().value <= 2.0 + 1e-9);
        let k = sys.k();
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    prop_assert!(bell_triangle_slack(&sys, a, b, c).unwrap() >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn diagram_rebuilds_joint_entropies(sys in consistent_system(3, 3), ui in any::<usize>()) {
        let n = sys.n();
        let u = settings(ui % sys.setting_count(), n, sys.k());
        let d = atom_measures(&sys, &u).unwrap();
        for alpha in 1..1usize << n {
            prop_assert!((d.union_measure(alpha) - common::joint_entropy(&sys, alpha, &u)).abs() < 1e-9);
        }
    }

    #[test]
    fn marginals_and_conditionings_stay_valid(sys in consistent_system(3, 3), pick in any::<usize>()) {
        let n = sys.n();
        prop_assert!(sys.is_locally_consistent());
        let kept: Vec<usize> = (0..n).filter(|r| (pick >> r) & 1 == 1).collect();
        if !kept.is_empty() {
            let m = sys.marginal(&kept).unwrap().system;
            prop_assert!(m.is_locally_consistent());
            for ui in 0..m.setting_count() {
                let total = m.column(ui).iter().fold(q(0, 1), |a, p| a + p.clone());
                prop_assert_eq!(total, q(1, 1));
            }
        }
        if n >= 2 {
            let (region, setting, outcome) = (pick % n, (pick / n) % sys.k(), ((pick / 7) % 2) as u8);
            match sys.condition(region, setting, outcome) {
                Ok(c) => {
                    prop_assert!(c.system.is_locally_consistent());
                    if sys.is_separable() {
                        prop_assert!(c.system.is_separable());
                    }
                }
                Err(ModelError::ZeroProbabilityBranch { .. }) => {}
                Err(e) => prop_assert!(false, "{e:?}"),
            }
        }
    }

    #[test]
    fn perturbed_tables_are_rejected(sys in consistent_system(2, 2), at in any::<usize>()) {
        let mut table = sys.table().to_vec();
        let i = at % table.len();
        table[i] = table[i].clone() + q(1, 1000);
        let err = ProbabilitySystem::from_table(sys.n(), sys.k(), sys.labels().to_vec(), table).unwrap_err();
        let is_normalization = matches!(err, ModelError::NormalizationViolation { .. });
        prop_assert!(is_normalization);
    }

    #[test]
    fn pair_entropy_is_symmetric_and_bounded(sys in consistent_system(2, 3), a in 0usize..3, b in 0usize..3) {
        prop_assume!(sys.n() == 2);
        let k = sys.k();
        let (a, b) = (a % k, b % k);
        let swapped = ProbabilitySystem::from_fn(2, k, default_labels(k), |x, u| {
            sys.p(&[x[1], x[0]], &[u[1], u[0]]).clone()
        })
        .unwrap();
        let v = s2(&sys, a, b).unwrap();
        prop_assert!((v - s2(&swapped, b, a).unwrap()).abs() < 1e-12);
        let ha = measurement_entropy(&sys, &[0], &[a]).unwrap();
        let hb = measurement_entropy(&sys, &[1], &[b]).unwrap();
        prop_assert!(v >= -1e-12 && v <= ha.min(hb) + 1e-9);
    }
}

#[test]
fn product_law_holds_on_catalog_plans() {
    for e in entries() {
        let sys = match build(e.name, &Params::new()).unwrap() {
            AnySystem::Rational(s) => s,
            AnySystem::Float(_) => continue,
        };
        let mut leads: Vec<Vec<usize>> = vec![vec![]];
        for r in 0..sys.n().saturating_sub(1) {
            leads.push(vec![sys.n() - 1 - r]);
        }
        if sys.n() == 3 {
            leads.push(vec![2, 1]);
            leads.push(vec![0, 1]);
        }
        let mut compiled_any = false;
        for lead in leads {
            let plan = CollapsePlan::leading(&lead).unwrap();
            let Ok(compiled) = CompiledPlan::compile(&sys, &plan) else { continue };
            compiled_any = true;
            let law = compiled.product_law();
            assert!(law.exact, "{} {plan} {law:?}", e.name);
        }
        assert!(compiled_any, "{}", e.name);
    }
}

#[test]
fn float_catalog_plans_match_their_tables() {
    for e in entries() {
        let AnySystem::Float(sys) = build(e.name, &Params::new()).unwrap() else { continue };
        let compiled = CompiledPlan::compile(&sys, &CollapsePlan::leading(&[1]).unwrap()).unwrap();
        assert!(compiled.product_law().max_deviation < 1e-9, "{}", e.name);
        assert!(sys.table().iter().all(|p| p.to_f64() >= 0.0));
    }
}
