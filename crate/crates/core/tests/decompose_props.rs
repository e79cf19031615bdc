mod common;

use common::*;
use mau_core::decompose::{
    decompose_avoiding, decompose_over_cliques, interaction_terms, residual,
};
use mau_core::graph::{build_perfect_map, maximal_cliques};
use mau_core::independence::{test_cai, CaiQuery};
use mau_core::{Assignment, Scope, ToleranceConfig, UtilityFunction, UtilityTable, VariableSpace};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn random_reference(rng: &mut TestRng, space: &VariableSpace) -> Assignment {
    Assignment::from_state(&space.decode(rng.gen_range(0..space.state_count() as usize)))
}

fn random_utility(rng: &mut TestRng, space: &VariableSpace) -> UtilityTable {
    if rng.gen_bool(0.6) {
        let g = random_graph(rng, space, 0.4);
        planted_utility(rng, &g)
    } else {
        unstructured_utility(rng, space)
    }
}

fn random_scope(rng: &mut TestRng, n: usize, min: usize) -> Scope {
    loop {
        let s: Scope = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if s.len() >= min {
            return s;
        }
    }
}

/// Least-squares oracle: is `u` in the span of functions over scopes that
/// contain no avoided scope?
fn avoidable_by_least_squares(u: &UtilityTable, avoid: &[Scope]) -> bool {
    let space = u.space();
    let n = space.len();
    let allowed: Vec<Scope> = (0..1usize << n)
        .map(|m| (0..n).filter(|v| m & (1 << v) != 0).collect::<Scope>())
        .filter(|s| avoid.iter().all(|a| !a.is_subset(s)))
        .collect();
    let states = space.state_count() as usize;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for s in &allowed {
        // indicator functions of each joint value of the scope
        let size = space.scope_state_count(s) as usize;
        for k in 0..size {
            columns.push(
                (0..states)
                    .map(|i| {
                        let st = space.decode(i);
                        let mut idx = 0;
                        for v in s.iter() {
                            idx = idx * space.cardinality(v) + st[v];
                        }
                        if idx == k {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            );
        }
    }
    let a = DMatrix::from_fn(states, columns.len(), |r, c| columns[c][r]);
    let b = DVector::from_column_slice(u.values());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-10).unwrap();
    let fit = &a * x;
    (fit - b).amax() <= 1e-7 * (1.0 + u.max_abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn terms_reconstruct_for_any_reference(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=4);
        let space = mixed_space(&mut rng, n, 3);
        let u = random_utility(&mut rng, &space);
        let reference = random_reference(&mut rng, &space);
        let terms = interaction_terms(&u, &reference, None, &tol()).unwrap();
        let thr = u.threshold(&tol());
        for i in 0..space.state_count() as usize {
            let s = space.decode(i);
            let total: f64 = terms.iter().map(|t| {
                let mut idx = 0;
                for v in t.scope.iter() {
                    idx = idx * space.cardinality(v) + s[v];
                }
                t.values[idx]
            }).sum();
            prop_assert!((total - u.value_of_state(&s)).abs() <= 10.0 * thr);
        }
        for t in &terms {
            // zero on the reference slice of the scope
            let mut idx = 0;
            for v in t.scope.iter() {
                idx = idx * space.cardinality(v) + reference.get(v).unwrap();
            }
            prop_assert_eq!(t.values[idx], if t.scope.is_empty() { t.values[0] } else { 0.0 });
        }
    }

    #[test]
    fn clique_decomposition_is_exact_for_every_reference(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=5);
        let space = mixed_space(&mut rng, n, 3);
        let u = random_utility(&mut rng, &space);
        let g = build_perfect_map(&u, &tol());
        let cliques = maximal_cliques(&g);
        let reference = random_reference(&mut rng, &space);
        let report = decompose_over_cliques(&u, &g, &reference, &tol()).unwrap();
        prop_assert!(report.max_residual <= u.threshold(&tol()));
        let scopes: Vec<Scope> = report.decomposition.scopes().cloned().collect();
        prop_assert_eq!(&scopes, &cliques);
        for (i, a) in scopes.iter().enumerate() {
            for (j, b) in scopes.iter().enumerate() {
                prop_assert!(i == j || !a.is_subset(b));
            }
        }
        prop_assert_eq!(residual(&u, &report.decomposition).unwrap(), report.max_residual);
    }

    #[test]
    fn avoidance_is_jointly_achievable(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=4);
        let space = binary_space(n);
        let u = random_utility(&mut rng, &space);
        let k = rng.gen_range(1..=3);
        let family: Vec<Scope> = (0..k).map(|_| random_scope(&mut rng, n, 1)).collect();
        let reference = Assignment::new();
        let each = family.iter().all(|s| {
            decompose_avoiding(&u, std::slice::from_ref(s), &reference, &tol()).unwrap().is_some()
        });
        let joint = decompose_avoiding(&u, &family, &reference, &tol()).unwrap();
        if each {
            let d = joint.expect("separately avoidable implies jointly avoidable");
            prop_assert!(residual(&u, &d).unwrap() <= u.threshold(&tol()));
            for s in d.scopes() {
                prop_assert!(family.iter().all(|a| !a.is_subset(s)));
            }
        }
    }

    #[test]
    fn avoidance_agrees_with_least_squares(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=3);
        let space = binary_space(n);
        let u = random_utility(&mut rng, &space);
        let k = rng.gen_range(1..=2);
        let family: Vec<Scope> = (0..k).map(|_| random_scope(&mut rng, n, 1)).collect();
        let found = decompose_avoiding(&u, &family, &Assignment::new(), &tol()).unwrap().is_some();
        prop_assert_eq!(found, avoidable_by_least_squares(&u, &family));
    }

    #[test]
    fn avoiding_cross_pairs_is_cai(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=5);
        let space = binary_space(n);
        let u = random_utility(&mut rng, &space);
        for (x, z, y) in all_partitions(n) {
            let pairs: Vec<Scope> = x.iter()
                .flat_map(|a| y.iter().map(move |b| Scope::new([a, b])))
                .collect();
            let q = CaiQuery::new(x, z, y).unwrap();
            let cai = test_cai(&u, &q, &tol()).unwrap();
            let avoided = if pairs.is_empty() {
                true
            } else {
                decompose_avoiding(&u, &pairs, &Assignment::new(), &tol()).unwrap().is_some()
            };
            prop_assert_eq!(avoided, cai);
        }
    }
}
