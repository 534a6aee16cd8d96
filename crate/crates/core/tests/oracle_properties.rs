use proptest::prelude::*;

use tlex_core::consistency::{check, CheckOutcome, CompoundDAG};
use tlex_core::oracle::{
    brute_consistent, brute_min_timeline, component_count, enumerate_timelines, generate_random_dag, generate_random_graph,
    generate_random_pa, Fault, OracleBudget,
};
use tlex_core::pa::{transform, PAGraph};
use tlex_core::partition::partition;
use tlex_core::timeline::{greedy_kahn, indeterminacy_table, is_indeterminate, ReachabilityMode, TableOptions};

fn order_varies(dag: &CompoundDAG, u: usize, v: usize) -> bool {
    let all = enumerate_timelines(dag, OracleBudget::default()).unwrap();
    let rel = |t: &tlex_core::timeline::NormalFormTimeline| t.position(u).cmp(&t.position(v));
    all.iter().any(|t| rel(t) != rel(&all[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn check_agrees_with_brute_force(seed in any::<u64>(), n in 1usize..=12, density in 0.05f64..0.6) {
        let pa = generate_random_pa(seed, n, density);
        let expected = brute_consistent(&pa, OracleBudget::default()).unwrap();
        prop_assert_eq!(check(&pa).is_consistent(), expected);
    }

    #[test]
    fn every_reported_cycle_is_inconsistent_on_its_own(seed in any::<u64>(), n in 2usize..=12, density in 0.2f64..0.7) {
        let pa = generate_random_pa(seed, n, density);
        if let CheckOutcome::Inconsistent(report) = check(&pa) {
            prop_assert!(!report.cycles.is_empty());
            for cycle in &report.cycles {
                let alone = PAGraph::from_constraints([], cycle.constraints.clone());
                prop_assert!(!brute_consistent(&alone, OracleBudget::default()).unwrap(), "{:?}", cycle);
                prop_assert!(!cycle.link_ids.is_empty());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_kahn_is_the_pointwise_minimum(seed in any::<u64>(), n in 1usize..=10, density in 0.0f64..0.8) {
        let dag = generate_random_dag(seed, n, density);
        let greedy = greedy_kahn(&dag).unwrap();
        prop_assert!(greedy.satisfies(&dag));
        prop_assert_eq!(greedy, brute_min_timeline(&dag, OracleBudget::default()).unwrap());
    }

    #[test]
    fn greedy_kahn_on_consistent_constraint_graphs(seed in any::<u64>(), n in 1usize..=12, density in 0.05f64..0.4) {
        let pa = generate_random_pa(seed, n, density);
        if let CheckOutcome::Consistent(dag) = check(&pa) {
            let greedy = greedy_kahn(&dag).unwrap();
            prop_assert_eq!(greedy, brute_min_timeline(&dag, OracleBudget::default()).unwrap());
        }
    }

    #[test]
    fn indeterminacy_matches_enumeration(seed in any::<u64>(), n in 2usize..=7, density in 0.0f64..0.8) {
        let dag = generate_random_dag(seed, n, density);
        let all = enumerate_timelines(&dag, OracleBudget::default()).unwrap();
        let min = greedy_kahn(&dag).unwrap();
        for t in &all {
            prop_assert!(t.satisfies(&dag));
            for c in 0..n {
                prop_assert!(min.position(c) <= t.position(c));
            }
        }
        let table = indeterminacy_table(&dag, &min, TableOptions { full_pairs: true, mode: ReachabilityMode::Closure });
        let pairs = table.unordered_pairs.unwrap();
        for u in 0..n {
            for v in u + 1..n {
                let varies = order_varies(&dag, u, v);
                prop_assert_eq!(is_indeterminate(&dag, u, v), varies);
                prop_assert_eq!(pairs.contains(&(u, v)), varies);
            }
        }
    }

    #[test]
    fn partition_matches_union_find(seed in any::<u64>(), n in 1usize..=30, density in 0.0f64..0.3, slinks in 0.0f64..0.5) {
        let g = generate_random_graph(seed, n, density, slinks, Fault::None).graph;
        let p = partition(&g);
        prop_assert_eq!(p.len(), component_count(&g));
        let covered: usize = p.subgraphs.iter().map(|s| s.n()).sum();
        prop_assert_eq!(covered, g.n());
        let slink_total = g.links().iter().filter(|l| l.kind() == tlex_core::model::LinkKind::Slink).count();
        prop_assert_eq!(p.connecting_points.len() + p.intra_slinks().count(), slink_total);
    }

    #[test]
    fn generated_documents_are_consistent(seed in any::<u64>(), n in 1usize..=25, density in 0.0f64..0.6) {
        let g = generate_random_graph(seed, n, density, 0.1, Fault::None).graph;
        for sub in &partition(&g).subgraphs {
            let pa = transform(sub);
            prop_assert!(check(&pa).is_consistent());
        }
    }
}
