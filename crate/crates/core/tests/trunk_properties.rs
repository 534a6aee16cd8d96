use std::collections::BTreeMap;

use proptest::prelude::*;

use tlex_core::analysis::{analyze, AnalysisOptions, IndeterminacyMode};
use tlex_core::model::LinkRel;
use tlex_core::oracle::{generate_random_graph, Fault};
use tlex_core::pa::TimePoint;
use tlex_core::timeline::ReachabilityMode;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn trunk_and_branch_layout(seed in any::<u64>(), n in 2usize..=30, density in 0.02f64..0.3, slink_prob in 0.0f64..0.4) {
        let graph = generate_random_graph(seed, n, density, slink_prob, Fault::None).graph;
        let a = analyze("p", &graph, &AnalysisOptions::default()).unwrap();
        let tb = a.timeline().expect("generated documents are consistent");

        // main subgraphs are laid out back to back in partition order
        let mut next = 0;
        for (s, offset) in &tb.global_offsets {
            prop_assert_eq!(*offset, next);
            next += tb.timelines[*s].timeline.length();
        }
        prop_assert_eq!(tb.trunk_length, next);

        let targeted: Vec<usize> = a.partition.connecting_points.iter().map(|c| c.target_subgraph).collect();
        for t in &tb.timelines {
            prop_assert!(t.timeline.satisfies(&t.dag));
            prop_assert_eq!(t.is_main, !targeted.contains(&t.subgraph));
            for e in a.partition.subgraphs[t.subgraph].nodes() {
                let (s, f) = (TimePoint::start(&e.node), TimePoint::end(&e.node));
                let (ls, lf) = (t.local_position(&s).unwrap(), t.local_position(&f).unwrap());
                prop_assert!(1 <= ls && ls < lf && lf <= t.timeline.length());
                if t.is_main {
                    let (gs, gf) = (tb.global_position(t.subgraph, &s).unwrap(), tb.global_position(t.subgraph, &f).unwrap());
                    prop_assert_eq!(gf - gs, lf - ls);
                    prop_assert!(gf <= tb.trunk_length);
                } else {
                    prop_assert!(tb.global_position(t.subgraph, &s).is_none());
                }
            }
        }

        // each SLINK is placed exactly once, as a branch link or an intra-subgraph link
        let mut placed: BTreeMap<&str, usize> = BTreeMap::new();
        for l in tb.branch_links.iter().chain(&tb.intra_links) {
            *placed.entry(l.link_id.as_str()).or_default() += 1;
        }
        let slinks: Vec<&str> =
            graph.links().iter().filter(|l| matches!(l.rel, LinkRel::Slink(_))).map(|l| l.link_id.as_str()).collect();
        prop_assert_eq!(placed.len(), slinks.len());
        for id in slinks {
            prop_assert_eq!(placed.get(id), Some(&1));
        }
        for l in &tb.branch_links {
            prop_assert_ne!(l.source.subgraph, l.target.subgraph);
            prop_assert_eq!(l.source.global.is_some(), tb.is_main(l.source.subgraph));
        }
    }

    #[test]
    fn reachability_modes_give_identical_reports(seed in any::<u64>(), n in 2usize..=30, density in 0.02f64..0.3) {
        let graph = generate_random_graph(seed, n, density, 0.1, Fault::None).graph;
        let dfs = AnalysisOptions { indeterminacy: IndeterminacyMode::Full, ..Default::default() };
        let closure = AnalysisOptions { reachability: ReachabilityMode::Closure, ..dfs.clone() };
        let a = analyze("p", &graph, &dfs).unwrap().report().to_json();
        let b = analyze("p", &graph, &closure).unwrap().report().to_json();
        prop_assert_eq!(a, b);
    }
}
