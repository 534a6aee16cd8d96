use std::collections::BTreeSet;
use std::path::PathBuf;

use tlex_core::analysis::{analyze, Analysis, AnalysisOptions};
use tlex_core::consistency::{check, CheckOutcome, CycleType};
use tlex_core::model::{NodeId, TimeMLGraph};
use tlex_core::oracle::{brute_min_timeline, enumerate_timelines, OracleBudget};
use tlex_core::pa::{transform, TimePoint};
use tlex_core::parser::{parse_document, resolve_graph};
use tlex_core::partition::partition;
use tlex_core::timeline::{greedy_kahn, indeterminacy_table, is_indeterminate, Section, TableOptions};

fn fixture(name: &str) -> TimeMLGraph {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let doc = parse_document(&std::fs::read(path).unwrap()).unwrap();
    resolve_graph(&doc, AnalysisOptions::default().graph_options()).unwrap()
}

fn run(name: &str) -> Analysis {
    let g = fixture(name);
    analyze(name, &g, &AnalysisOptions::default()).unwrap()
}

fn ev(id: &str) -> NodeId {
    NodeId::event(id)
}

#[test]
fn five_intervals_minimum_timeline() {
    let g = fixture("five_intervals.tml");
    let p = partition(&g);
    assert_eq!(p.len(), 1);
    let CheckOutcome::Consistent(dag) = check(&transform(&p.subgraphs[0])) else { panic!("consistent fixture") };
    let t = greedy_kahn(&dag).unwrap();
    assert_eq!(t.length(), 8);
    let expect = [("ei1", 1, 2), ("ei2", 3, 4), ("ei3", 3, 4), ("ei4", 5, 6), ("ei5", 7, 8)];
    for (id, s, e) in expect {
        assert_eq!(t.point_position(&dag, &TimePoint::start(&ev(id))), Some(s), "{id} start");
        assert_eq!(t.point_position(&dag, &TimePoint::end(&ev(id))), Some(e), "{id} end");
    }
    assert_eq!(brute_min_timeline(&dag, OracleBudget::default()).unwrap(), t);
    assert_eq!(enumerate_timelines(&dag, OracleBudget::default()).unwrap().len(), 13);

    let c2 = dag.compound_of(&TimePoint::start(&ev("ei2"))).unwrap();
    let c3 = dag.compound_of(&TimePoint::start(&ev("ei3"))).unwrap();
    assert!(is_indeterminate(&dag, c2, c3));
    let table = indeterminacy_table(&dag, &t, TableOptions::default());
    assert_eq!(table.sections, vec![Section { start: 3, end: 4, pairs: 4 }]);
}

#[test]
fn running_example_partition() {
    let g = fixture("running_example.tml");
    let p = partition(&g);
    assert_eq!(p.len(), 3);
    let cps: Vec<(&str, &str)> = p.connecting_points.iter().map(|c| (c.source.id.as_str(), c.target.id.as_str())).collect();
    assert_eq!(cps, [("ei4", "ei5"), ("ei13", "ei14")]);
    let members = |s: usize| p.subgraphs[s].nodes().iter().map(|e| e.node.id.clone()).collect::<BTreeSet<_>>();
    assert_eq!(members(1), BTreeSet::from(["ei5".to_string(), "ei6".to_string()]));
    assert_eq!(members(2), BTreeSet::from(["ei14".to_string(), "ei15".to_string(), "t16".to_string()]));
    assert_eq!(members(0).len(), 15);
}

#[test]
fn running_example_compounds() {
    let g = fixture("running_example.tml");
    let p = partition(&g);
    let CheckOutcome::Consistent(dag) = check(&transform(&p.subgraphs[0])) else { panic!("consistent fixture") };
    let mut merged: Vec<Vec<String>> = dag
        .compounds()
        .iter()
        .filter(|c| c.members.len() > 1)
        .map(|c| c.members.iter().map(|m| m.to_string()).collect())
        .collect();
    merged.sort();
    assert_eq!(merged, vec![vec!["ei11⁻", "ei8⁺", "ei9⁺"], vec!["ei8⁻", "ei9⁻"]]);
}

#[test]
fn running_example_trunk_and_branches() {
    let a = run("running_example.tml");
    let r = a.report();
    assert!(r.consistent);
    let trunk = r.trunk.as_ref().unwrap();
    let on_trunk: BTreeSet<&str> = trunk.points.iter().map(|p| p.node.as_str()).collect();
    let expected: BTreeSet<&str> =
        ["ei1", "t2", "ei3", "ei4", "ei7", "ei8", "ei9", "ei10", "ei11", "ei12", "ei13", "ei17", "ei18", "ei19", "ei20"].into();
    assert_eq!(on_trunk, expected);

    assert_eq!(r.branches.len(), 2);
    let anchors: Vec<&str> = r.branches.iter().map(|b| b.anchor.as_ref().unwrap().node.as_str()).collect();
    assert_eq!(anchors, ["ei4", "ei13"]);
    let pos = |id: &str| trunk.points.iter().find(|p| p.node == id).unwrap().global_pos;
    for b in &r.branches {
        let anchor = b.anchor.as_ref().unwrap();
        assert_eq!(anchor.global_pos, Some(pos(&anchor.node)));
    }
    let branch_nodes = |i: usize| r.branches[i].timeline.points.iter().map(|p| p.node.as_str()).collect::<BTreeSet<_>>();
    assert_eq!(branch_nodes(0), ["ei5", "ei6"].into());
    assert_eq!(branch_nodes(1), ["ei14", "ei15", "t16"].into());
    assert_eq!(r.intra_slinks.len(), 1);
    assert_eq!(r.intra_slinks[0].link_id, "l27");
}

#[test]
fn running_example_indeterminacy() {
    let a = run("running_example.tml");
    let r = a.report();
    assert_eq!(r.indeterminate_sections.len(), 1);
    let s = &r.indeterminate_sections[0];
    assert!(s.on_trunk);
    assert_eq!(s.nodes, ["ei1", "ei20"]);

    let tb = a.timeline().unwrap();
    let main = &tb.timelines[0];
    let c = |id: &str| main.dag.compound_of(&TimePoint::start(&ev(id))).unwrap();
    assert!(is_indeterminate(&main.dag, c("ei1"), c("ei20")));
    assert!(!is_indeterminate(&main.dag, c("ei1"), c("ei3")));
}

#[test]
fn before_cycle_is_a_single_type_three_cycle() {
    let r = run("before_cycle.tml").report();
    assert!(!r.consistent);
    assert_eq!(r.mlic.len(), 1);
    assert_eq!(r.mlic[0].cycle_type, CycleType::TypeIII);
    let ids: Vec<&str> = r.mlic[0].links.iter().map(|l| l.link_id.as_str()).collect();
    assert_eq!(ids, ["l1", "l2"]);
}

#[test]
fn alinks_change_the_verdict() {
    let a = run("alink_conflict.tml");
    assert!(!a.is_consistent());
    assert_eq!(a.consistent_tlinks_only, Some(true));
    let tlinks_only = AnalysisOptions { include_alinks: false, ..Default::default() };
    assert!(analyze("x", &fixture("alink_conflict.tml"), &tlinks_only).unwrap().is_consistent());
}

#[test]
fn self_loops_are_dropped_with_a_warning() {
    let r = run("self_loop.tml").report();
    assert!(r.consistent);
    assert!(r.warnings.iter().any(|w| w.contains("l2")));

    let keep = AnalysisOptions { drop_self_loops: false, ..Default::default() };
    let doc = parse_document(&std::fs::read(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/self_loop.tml")).unwrap())
        .unwrap();
    let g = resolve_graph(&doc, keep.graph_options()).unwrap();
    let r = analyze("x", &g, &keep).unwrap().report();
    assert!(!r.consistent);
    // ei1⁺ < ei1⁻ against the implicit ei1⁻ < ei1⁺
    assert_eq!(r.mlic[0].cycle_type, CycleType::TypeII);
}

#[test]
fn unlinked_events_each_form_a_main_timeline() {
    let r = run("unlinked.tml").report();
    let trunk = r.trunk.unwrap();
    assert_eq!(trunk.segments.len(), 2);
    assert_eq!((trunk.segments[1].offset, trunk.length), (2, 4));
}

#[test]
fn reports_are_stable() {
    let a = run("running_example.tml").report().to_json();
    let b = run("running_example.tml").report().to_json();
    assert_eq!(a, b);
    let back: tlex_core::analysis::DocumentReport = serde_json::from_str(&a).unwrap();
    assert_eq!(back.to_json(), a);
}
