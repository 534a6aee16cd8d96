//! Trunk-and-branch assembly: main timelines are concatenated into one trunk,
//! subordinated timelines hang off it at their SLINK connecting points.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::CompoundDAG;
use crate::model::{LinkRel, NodeId, SlinkRel};
use crate::pa::TimePoint;
use crate::partition::Partition;
use crate::timeline::{IndeterminacyTable, NormalFormTimeline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrunkBranchError {
    #[error("anchor {0} is not a node of the document")]
    AnchorUnknown(String),
    #[error("no timeline supplied for subgraph {0}")]
    MissingTimeline(usize),
}

/// Main subgraphs. With `anchors`, a subgraph is main iff it contains an
/// anchor. Without, it is main iff no SLINK from another subgraph targets it.
pub fn identify_main(partition: &Partition, anchors: Option<&BTreeSet<String>>) -> Result<BTreeSet<usize>, TrunkBranchError> {
    match anchors {
        Some(anchors) => anchors
            .iter()
            .map(|a| partition.subgraph_of(a).ok_or_else(|| TrunkBranchError::AnchorUnknown(a.clone())))
            .collect(),
        None => {
            let targeted: BTreeSet<usize> = partition.connecting_points.iter().map(|cp| cp.target_subgraph).collect();
            Ok((0..partition.len()).filter(|s| !targeted.contains(s)).collect())
        }
    }
}

/// Minimum timeline of one subgraph together with its compound graph.
#[derive(Debug, Clone)]
pub struct SubgraphTimeline {
    pub subgraph: usize,
    pub dag: CompoundDAG,
    pub timeline: NormalFormTimeline,
    pub table: IndeterminacyTable,
    pub is_main: bool,
}

impl SubgraphTimeline {
    pub fn local_position(&self, p: &TimePoint) -> Option<u32> {
        self.timeline.point_position(&self.dag, p)
    }
}

/// A node located on its subgraph's timeline; `global` is set only for
/// nodes on the trunk. Positions refer to the node's start point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedNode {
    pub node: NodeId,
    pub subgraph: usize,
    pub local: u32,
    pub global: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlinkPlacement {
    pub link_id: String,
    pub rel: SlinkRel,
    pub source: PlacedNode,
    pub target: PlacedNode,
}

#[derive(Debug, Clone)]
pub struct TrunkBranchTimeline {
    /// One entry per subgraph, in partition order.
    pub timelines: Vec<SubgraphTimeline>,
    /// Offset added to the local positions of each main subgraph.
    pub global_offsets: BTreeMap<usize, u32>,
    pub trunk_length: u32,
    /// SLINKs joining different subgraphs, in text order of their source.
    pub branch_links: Vec<SlinkPlacement>,
    /// SLINKs inside one subgraph; they connect no branch.
    pub intra_links: Vec<SlinkPlacement>,
}

impl TrunkBranchTimeline {
    pub fn is_main(&self, subgraph: usize) -> bool {
        self.global_offsets.contains_key(&subgraph)
    }

    /// Trunk position of a point, or `None` if it lies on a branch.
    pub fn global_position(&self, subgraph: usize, p: &TimePoint) -> Option<u32> {
        let offset = self.global_offsets.get(&subgraph)?;
        self.timelines[subgraph].local_position(p).map(|l| l + offset)
    }

    /// Subordinated subgraphs with their rendered anchor: the first link in
    /// text order that enters them, if any.
    pub fn branches(&self) -> Vec<(usize, Option<&SlinkPlacement>)> {
        self.timelines
            .iter()
            .filter(|t| !t.is_main)
            .map(|t| (t.subgraph, self.branch_links.iter().find(|l| l.target.subgraph == t.subgraph)))
            .collect()
    }
}

/// Joins per-subgraph results into a trunk-and-branch timeline. `results`
/// must hold one entry per subgraph, in partition order.
pub fn assemble(
    partition: &Partition,
    results: Vec<Option<(CompoundDAG, NormalFormTimeline, IndeterminacyTable)>>,
    mains: &BTreeSet<usize>,
) -> Result<TrunkBranchTimeline, TrunkBranchError> {
    let mut timelines = Vec::with_capacity(partition.len());
    for s in 0..partition.len() {
        let Some(Some((dag, timeline, table))) = results.get(s).cloned() else {
            return Err(TrunkBranchError::MissingTimeline(s));
        };
        timelines.push(SubgraphTimeline { subgraph: s, dag, timeline, table, is_main: mains.contains(&s) });
    }

    let mut global_offsets = BTreeMap::new();
    let mut trunk_length = 0u32;
    for t in timelines.iter().filter(|t| t.is_main) {
        global_offsets.insert(t.subgraph, trunk_length);
        trunk_length += t.timeline.length();
    }

    let place = |node: &NodeId| -> PlacedNode {
        let subgraph = partition.subgraph_of(&node.id).expect("SLINK endpoints belong to the partition");
        let local = timelines[subgraph].local_position(&TimePoint::start(node)).expect("every node has a start point");
        PlacedNode { node: node.clone(), subgraph, local, global: global_offsets.get(&subgraph).map(|o| o + local) }
    };
    let placement = |link_id: &str, rel: SlinkRel, source: &NodeId, target: &NodeId| SlinkPlacement {
        link_id: link_id.to_string(),
        rel,
        source: place(source),
        target: place(target),
    };

    let branch_links = partition
        .connecting_points
        .iter()
        .map(|cp| placement(&cp.link_id, cp.rel, &cp.source, &cp.target))
        .collect();
    let intra_links = partition
        .intra_slinks()
        .filter_map(|l| match l.rel {
            LinkRel::Slink(rel) => Some(placement(&l.link_id, rel, &l.source, &l.target)),
            _ => None,
        })
        .collect();

    Ok(TrunkBranchTimeline { timelines, global_offsets, trunk_length, branch_links, intra_links })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakingPair {
    pub subgraph_a: usize,
    pub subgraph_b: usize,
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub char_distance: usize,
}

impl BreakingPair {
    /// Rough word distance, assuming six characters per word.
    pub fn approx_words(&self) -> usize {
        self.char_distance / 6
    }
}

/// For each pair of consecutive main subgraphs (in text order), the two
/// entities, one from each, that are closest in the text.
pub fn breaking_pairs(partition: &Partition, mains: &BTreeSet<usize>) -> Vec<BreakingPair> {
    let mains: Vec<usize> = mains.iter().copied().collect();
    mains
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&partition.subgraphs[w[0]], &partition.subgraphs[w[1]]);
            a.nodes()
                .iter()
                .flat_map(|x| b.nodes().iter().map(move |y| (x.char_offset.abs_diff(y.char_offset), x, y)))
                .min_by(|p, q| (p.0, &p.1.node, &p.2.node).cmp(&(q.0, &q.1.node, &q.2.node)))
                .map(|(d, x, y)| BreakingPair {
                    subgraph_a: w[0],
                    subgraph_b: w[1],
                    node_a: x.node.clone(),
                    node_b: y.node.clone(),
                    char_distance: d,
                })
        })
        .collect()
}

/// Per-document figures feeding [`corpus_stats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocStats {
    pub doc_id: String,
    pub consistent: bool,
    /// Verdict with ALINKs removed; `None` when not computed.
    pub consistent_tlinks_only: Option<bool>,
    /// Verdict with ALINKs kept; `None` when not computed.
    pub consistent_with_alinks: Option<bool>,
    pub mlic_size: usize,
    pub subgraphs: usize,
    pub main_length: u32,
    pub branches: usize,
    pub sections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Summary::default();
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary { min, avg: values.iter().sum::<f64>() / values.len() as f64, max }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub consistent: usize,
    pub inconsistent: usize,
    pub inconsistent_tlinks_only: usize,
    pub inconsistent_with_alinks: usize,
    pub mlic_total: usize,
    /// Timeline figures over consistent documents only.
    pub main_length: Summary,
    pub branches: Summary,
    pub sections: Summary,
    pub rows: Vec<DocStats>,
}

pub fn corpus_stats(rows: Vec<DocStats>) -> CorpusStats {
    let ok: Vec<&DocStats> = rows.iter().filter(|r| r.consistent).collect();
    CorpusStats {
        documents: rows.len(),
        consistent: ok.len(),
        inconsistent: rows.len() - ok.len(),
        inconsistent_tlinks_only: rows.iter().filter(|r| r.consistent_tlinks_only == Some(false)).count(),
        inconsistent_with_alinks: rows.iter().filter(|r| r.consistent_with_alinks == Some(false)).count(),
        mlic_total: rows.iter().map(|r| r.mlic_size).sum(),
        main_length: Summary::of(ok.iter().map(|r| r.main_length as f64)),
        branches: Summary::of(ok.iter().map(|r| r.branches as f64)),
        sections: Summary::of(ok.iter().map(|r| r.sections as f64)),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{check, CheckOutcome};
    use crate::model::{build_graph, GraphOptions, TemporalEntity, TimeMLGraph, TimeMLLink, TlinkRel};
    use crate::pa::transform;
    use crate::partition::partition;
    use crate::timeline::{greedy_kahn, indeterminacy_table, TableOptions};

    fn graph(n: usize, links: Vec<TimeMLLink>) -> TimeMLGraph {
        let ents = (1..=n).map(|i| TemporalEntity::event(&format!("e{i:02}"), "x", i * 10)).collect();
        build_graph(ents, links, GraphOptions::default()).unwrap()
    }

    fn ev(i: usize) -> NodeId {
        NodeId::event(format!("e{i:02}"))
    }

    fn solve(p: &Partition) -> Vec<Option<(CompoundDAG, NormalFormTimeline, IndeterminacyTable)>> {
        p.subgraphs
            .iter()
            .map(|s| {
                let CheckOutcome::Consistent(dag) = check(&transform(s)) else { return None };
                let t = greedy_kahn(&dag).unwrap();
                let table = indeterminacy_table(&dag, &t, TableOptions::default());
                Some((dag, t, table))
            })
            .collect()
    }

    #[test]
    fn single_subgraph_is_the_trunk() {
        let g = graph(2, vec![TimeMLLink::tlink("l1", ev(1), ev(2), TlinkRel::Before)]);
        let p = partition(&g);
        let mains = identify_main(&p, None).unwrap();
        let tb = assemble(&p, solve(&p), &mains).unwrap();
        assert_eq!(tb.global_offsets, BTreeMap::from([(0, 0)]));
        assert_eq!(tb.trunk_length, 4);
        assert!(tb.branches().is_empty());
    }

    #[test]
    fn mains_are_concatenated() {
        // subgraph 0: one interval (length 2); subgraph 1: e2 before e3 (length 4)
        let g = graph(3, vec![TimeMLLink::tlink("l1", ev(2), ev(3), TlinkRel::Before)]);
        let p = partition(&g);
        let mains = identify_main(&p, None).unwrap();
        let tb = assemble(&p, solve(&p), &mains).unwrap();
        assert_eq!(tb.global_offsets, BTreeMap::from([(0, 0), (1, 2)]));
        assert_eq!(tb.trunk_length, 6);
        assert_eq!(tb.global_position(1, &TimePoint::start(&ev(3))), Some(5));
    }

    #[test]
    fn slink_chain_has_one_main() {
        let g = graph(
            3,
            vec![
                TimeMLLink::slink("l1", ev(1), ev(2), SlinkRel::Modal),
                TimeMLLink::slink("l2", ev(2), ev(3), SlinkRel::Modal),
            ],
        );
        let p = partition(&g);
        let mains = identify_main(&p, None).unwrap();
        assert_eq!(mains, BTreeSet::from([0]));
        let tb = assemble(&p, solve(&p), &mains).unwrap();
        let branches = tb.branches();
        assert_eq!(branches.len(), 2);
        assert_eq!(branches[0].1.unwrap().source.global, Some(1));
        assert_eq!(branches[1].1.unwrap().source.global, None);
    }

    #[test]
    fn anchors_choose_mains() {
        let g = graph(2, vec![TimeMLLink::slink("l1", ev(1), ev(2), SlinkRel::Modal)]);
        let p = partition(&g);
        let anchors = BTreeSet::from(["e02".to_string()]);
        assert_eq!(identify_main(&p, Some(&anchors)).unwrap(), BTreeSet::from([1]));
        let unknown = BTreeSet::from(["nope".to_string()]);
        assert_eq!(identify_main(&p, Some(&unknown)), Err(TrunkBranchError::AnchorUnknown("nope".into())));
    }

    #[test]
    fn missing_timeline() {
        let g = graph(2, vec![]);
        let p = partition(&g);
        let mut results = solve(&p);
        results[1] = None;
        assert_eq!(assemble(&p, results, &BTreeSet::from([0, 1])).unwrap_err(), TrunkBranchError::MissingTimeline(1));
    }

    #[test]
    fn breaking_pairs_pick_nearest_entities() {
        let ents = vec![
            TemporalEntity::event("a", "x", 0),
            TemporalEntity::event("b", "x", 30),
            TemporalEntity::event("c", "x", 45),
            TemporalEntity::event("d", "x", 90),
        ];
        let links = vec![
            TimeMLLink::tlink("l1", NodeId::event("a"), NodeId::event("b"), TlinkRel::Before),
            TimeMLLink::tlink("l2", NodeId::event("c"), NodeId::event("d"), TlinkRel::Before),
        ];
        let g = build_graph(ents, links, GraphOptions::default()).unwrap();
        let p = partition(&g);
        let pairs = breaking_pairs(&p, &BTreeSet::from([0, 1]));
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].node_a.id.as_str(), pairs[0].node_b.id.as_str(), pairs[0].char_distance), ("b", "c", 15));
        assert!(breaking_pairs(&p, &BTreeSet::from([0])).is_empty());

        let g = graph(3, vec![]);
        assert_eq!(breaking_pairs(&partition(&g), &BTreeSet::from([0, 1, 2])).len(), 2);
    }

    fn row(len: u32, consistent: bool) -> DocStats {
        DocStats {
            doc_id: format!("d{len}"),
            consistent,
            consistent_tlinks_only: Some(true),
            consistent_with_alinks: Some(consistent),
            mlic_size: usize::from(!consistent),
            subgraphs: 1,
            main_length: len,
            branches: 0,
            sections: 1,
        }
    }

    #[test]
    fn corpus_aggregation() {
        assert_eq!(corpus_stats(vec![]), CorpusStats::default());
        let s = corpus_stats(vec![row(4, true), row(8, true), row(18, true), row(0, false)]);
        assert_eq!(s.main_length, Summary { min: 4.0, avg: 10.0, max: 18.0 });
        assert_eq!((s.documents, s.inconsistent, s.inconsistent_with_alinks, s.inconsistent_tlinks_only), (4, 1, 1, 0));
    }
}
