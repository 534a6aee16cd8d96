//! Whole-document pipeline: partition, per-subgraph consistency checking and
//! timeline generation, trunk-and-branch assembly, and the serializable
//! report built from the result.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::{check, CheckOutcome, CycleType, InconsistencyReport};
use crate::model::{GraphError, GraphOptions, LinkKind, LinkRel, TimeMLGraph, TimeMLLink};
use crate::pa::{transform, PointEnd, TimePoint};
use crate::partition::{partition, Partition};
use crate::timeline::{greedy_kahn, indeterminacy_table, IndeterminacyTable, ReachabilityMode, TableOptions};
use crate::trunk_branch::{assemble, identify_main, DocStats, SlinkPlacement, TrunkBranchError, TrunkBranchTimeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndeterminacyMode {
    None,
    #[default]
    Sections,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub drop_self_loops: bool,
    pub include_alinks: bool,
    pub indeterminacy: IndeterminacyMode,
    pub reachability: ReachabilityMode,
    /// Nodes known to lie on main timelines; replaces the no-incoming-SLINK rule.
    pub anchors: Option<BTreeSet<String>>,
    /// Also compute the verdict of the opposite ALINK setting.
    pub both_alink_verdicts: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            drop_self_loops: true,
            include_alinks: true,
            indeterminacy: IndeterminacyMode::Sections,
            reachability: ReachabilityMode::Dfs,
            anchors: None,
            both_alink_verdicts: true,
        }
    }
}

impl AnalysisOptions {
    /// Options for building the input graph; ALINKs are always kept so the
    /// TLINK-only view can be derived from it.
    pub fn graph_options(&self) -> GraphOptions {
        GraphOptions { drop_self_loops: self.drop_self_loops, include_alinks: true }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Assembly(#[from] TrunkBranchError),
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Consistent(TrunkBranchTimeline),
    /// Reports of the inconsistent subgraphs, by subgraph index.
    Inconsistent(Vec<(usize, InconsistencyReport)>),
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub doc_id: String,
    pub options: AnalysisOptions,
    /// The graph actually analysed (ALINKs removed if so configured).
    pub graph: TimeMLGraph,
    pub partition: Partition,
    pub outcome: Outcome,
    pub consistent_tlinks_only: Option<bool>,
    pub consistent_with_alinks: Option<bool>,
}

fn verdict(graph: &TimeMLGraph) -> bool {
    partition(graph).subgraphs.iter().all(|s| check(&transform(s)).is_consistent())
}

/// Runs the full pipeline on `graph`, which should have been built with
/// [`AnalysisOptions::graph_options`].
pub fn analyze(doc_id: &str, graph: &TimeMLGraph, options: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    let primary = if options.include_alinks {
        graph.clone()
    } else {
        graph.with_options(GraphOptions { drop_self_loops: options.drop_self_loops, include_alinks: false })?
    };
    let part = partition(&primary);

    let mut results = Vec::with_capacity(part.len());
    let mut failures = Vec::new();
    for (i, sub) in part.subgraphs.iter().enumerate() {
        match check(&transform(sub)) {
            CheckOutcome::Consistent(dag) => {
                let timeline = greedy_kahn(&dag).expect("checked graphs are acyclic");
                let table = match options.indeterminacy {
                    IndeterminacyMode::None => IndeterminacyTable { unordered_pairs: None, sections: vec![], section_pairs: 0 },
                    mode => indeterminacy_table(
                        &dag,
                        &timeline,
                        TableOptions { full_pairs: mode == IndeterminacyMode::Full, mode: options.reachability },
                    ),
                };
                results.push(Some((dag, timeline, table)));
            }
            CheckOutcome::Inconsistent(report) => {
                failures.push((i, report));
                results.push(None);
            }
        }
    }
    let consistent = failures.is_empty();

    let has_alinks = graph.has_kind(LinkKind::Alink);
    let (tlinks_only, with_alinks) = if options.include_alinks {
        let other = options.both_alink_verdicts.then(|| {
            if has_alinks {
                graph.with_options(GraphOptions { drop_self_loops: options.drop_self_loops, include_alinks: false }).map(|g| verdict(&g))
            } else {
                Ok(consistent)
            }
        });
        (other.transpose()?, Some(consistent))
    } else {
        let other = options.both_alink_verdicts.then(|| if has_alinks { verdict(graph) } else { consistent });
        (Some(consistent), other)
    };

    let outcome = if consistent {
        let mains = identify_main(&part, options.anchors.as_ref())?;
        Outcome::Consistent(assemble(&part, results, &mains)?)
    } else {
        Outcome::Inconsistent(failures)
    };

    Ok(Analysis {
        doc_id: doc_id.to_string(),
        options: options.clone(),
        graph: primary,
        partition: part,
        outcome,
        consistent_tlinks_only: tlinks_only,
        consistent_with_alinks: with_alinks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRef {
    pub link_id: String,
    pub source: String,
    pub target: String,
    #[serde(flatten)]
    pub rel: LinkRel,
}

impl From<&TimeMLLink> for LinkRef {
    fn from(l: &TimeMLLink) -> Self {
        LinkRef { link_id: l.link_id.clone(), source: l.source.id.clone(), target: l.target.id.clone(), rel: l.rel }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub subgraph: usize,
    pub cycle_type: CycleType,
    pub points: Vec<String>,
    pub links: Vec<LinkRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedPoint {
    pub node: String,
    pub end: PointEnd,
    /// Position on the branch's own timeline.
    pub pos: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrunkPoint {
    pub node: String,
    pub end: PointEnd,
    pub global_pos: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrunkSegment {
    pub subgraph: usize,
    pub offset: u32,
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrunkReport {
    pub length: u32,
    pub segments: Vec<TrunkSegment>,
    pub points: Vec<TrunkPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineReport {
    pub length: u32,
    pub points: Vec<PlacedPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlinkReport {
    pub link_id: String,
    pub rel: crate::model::SlinkRel,
    pub source: String,
    pub source_subgraph: usize,
    /// Trunk position of the source's start point, when on the trunk.
    pub source_global_pos: Option<u32>,
    pub target: String,
    pub target_subgraph: usize,
}

impl From<&SlinkPlacement> for SlinkReport {
    fn from(p: &SlinkPlacement) -> Self {
        SlinkReport {
            link_id: p.link_id.clone(),
            rel: p.rel,
            source: p.source.node.id.clone(),
            source_subgraph: p.source.subgraph,
            source_global_pos: p.source.global,
            target: p.target.node.id.clone(),
            target_subgraph: p.target.subgraph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub node: String,
    pub subgraph: usize,
    pub global_pos: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchReport {
    pub subgraph: usize,
    /// Source side of the first SLINK (in text order) entering the branch.
    pub anchor: Option<Anchor>,
    pub slink: Option<String>,
    pub rel: Option<crate::model::SlinkRel>,
    /// Every SLINK entering the branch.
    pub links: Vec<SlinkReport>,
    pub timeline: TimelineReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionReport {
    pub subgraph: usize,
    pub on_trunk: bool,
    /// Trunk positions when `on_trunk`, otherwise branch-local positions.
    pub start: u32,
    pub end: u32,
    pub nodes: Vec<String>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnorderedPair {
    pub subgraph: usize,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportStats {
    pub nodes: usize,
    pub links: usize,
    pub subgraphs: usize,
    pub main_timelines: usize,
    pub branches: usize,
    pub trunk_length: u32,
    pub sections: usize,
    pub section_pairs: usize,
    pub mlic_size: usize,
    pub consistent_tlinks_only: Option<bool>,
    pub consistent_with_alinks: Option<bool>,
}

/// Serializable result for one document. Field order is fixed and every list
/// is sorted, so equal inputs give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_id: String,
    pub consistent: bool,
    pub mlic: Vec<CycleReport>,
    pub trunk: Option<TrunkReport>,
    pub branches: Vec<BranchReport>,
    pub indeterminate_sections: Vec<SectionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unordered_pairs: Option<Vec<UnorderedPair>>,
    pub intra_slinks: Vec<SlinkReport>,
    pub stats: ReportStats,
    pub warnings: Vec<String>,
}

fn point_name(p: &TimePoint) -> String {
    p.to_string()
}

impl Analysis {
    pub fn is_consistent(&self) -> bool {
        matches!(self.outcome, Outcome::Consistent(_))
    }

    pub fn timeline(&self) -> Option<&TrunkBranchTimeline> {
        match &self.outcome {
            Outcome::Consistent(tb) => Some(tb),
            Outcome::Inconsistent(_) => None,
        }
    }

    pub fn mlic_size(&self) -> usize {
        match &self.outcome {
            Outcome::Consistent(_) => 0,
            Outcome::Inconsistent(f) => f.iter().map(|(_, r)| r.cycles.len()).sum(),
        }
    }

    pub fn doc_stats(&self) -> DocStats {
        let tb = self.timeline();
        DocStats {
            doc_id: self.doc_id.clone(),
            consistent: self.is_consistent(),
            consistent_tlinks_only: self.consistent_tlinks_only,
            consistent_with_alinks: self.consistent_with_alinks,
            mlic_size: self.mlic_size(),
            subgraphs: self.partition.len(),
            main_length: tb.map_or(0, |t| t.trunk_length),
            branches: tb.map_or(0, |t| t.timelines.iter().filter(|s| !s.is_main).count()),
            sections: tb.map_or(0, |t| t.timelines.iter().map(|s| s.table.sections.len()).sum()),
        }
    }

    pub fn report(&self) -> DocumentReport {
        let links_by_id: BTreeMap<&str, &TimeMLLink> = self.graph.links().iter().map(|l| (l.link_id.as_str(), l)).collect();
        let mut report = DocumentReport {
            doc_id: self.doc_id.clone(),
            consistent: self.is_consistent(),
            mlic: Vec::new(),
            trunk: None,
            branches: Vec::new(),
            indeterminate_sections: Vec::new(),
            unordered_pairs: None,
            intra_slinks: Vec::new(),
            stats: ReportStats::default(),
            warnings: self.graph.warnings().to_vec(),
        };
        match &self.outcome {
            Outcome::Inconsistent(failures) => {
                for (sub, r) in failures {
                    for c in &r.cycles {
                        report.mlic.push(CycleReport {
                            subgraph: *sub,
                            cycle_type: c.cycle_type,
                            points: c.points.iter().map(point_name).collect(),
                            links: c.link_ids.iter().filter_map(|id| links_by_id.get(id.as_str()).map(|l| LinkRef::from(*l))).collect(),
                        });
                    }
                }
            }
            Outcome::Consistent(tb) => self.fill_timeline(tb, &mut report),
        }
        let stats = self.doc_stats();
        report.stats = ReportStats {
            nodes: self.graph.n(),
            links: self.graph.links().len(),
            subgraphs: self.partition.len(),
            main_timelines: self.timeline().map_or(0, |t| t.global_offsets.len()),
            branches: stats.branches,
            trunk_length: stats.main_length,
            sections: stats.sections,
            section_pairs: self.timeline().map_or(0, |t| t.timelines.iter().map(|s| s.table.section_pairs).sum()),
            mlic_size: stats.mlic_size,
            consistent_tlinks_only: self.consistent_tlinks_only,
            consistent_with_alinks: self.consistent_with_alinks,
        };
        report
    }

    fn fill_timeline(&self, tb: &TrunkBranchTimeline, report: &mut DocumentReport) {
        let mut trunk_points = Vec::new();
        let mut segments = Vec::new();
        for st in tb.timelines.iter().filter(|s| s.is_main) {
            let offset = tb.global_offsets[&st.subgraph];
            segments.push(TrunkSegment { subgraph: st.subgraph, offset, length: st.timeline.length() });
            for c in st.dag.compounds() {
                for p in &c.members {
                    trunk_points.push(TrunkPoint {
                        node: p.node.id.clone(),
                        end: p.end,
                        global_pos: offset + st.timeline.position(c.index),
                    });
                }
            }
        }
        trunk_points.sort_by(|a, b| (a.global_pos, &a.node, a.end).cmp(&(b.global_pos, &b.node, b.end)));
        report.trunk = Some(TrunkReport { length: tb.trunk_length, segments, points: trunk_points });

        for (sub, anchor) in tb.branches() {
            let st = &tb.timelines[sub];
            let mut points: Vec<PlacedPoint> = st
                .dag
                .compounds()
                .iter()
                .flat_map(|c| {
                    c.members.iter().map(|p| PlacedPoint { node: p.node.id.clone(), end: p.end, pos: st.timeline.position(c.index) })
                })
                .collect();
            points.sort_by(|a, b| (a.pos, &a.node, a.end).cmp(&(b.pos, &b.node, b.end)));
            report.branches.push(BranchReport {
                subgraph: sub,
                anchor: anchor.map(|a| Anchor { node: a.source.node.id.clone(), subgraph: a.source.subgraph, global_pos: a.source.global }),
                slink: anchor.map(|a| a.link_id.clone()),
                rel: anchor.map(|a| a.rel),
                links: tb.branch_links.iter().filter(|l| l.target.subgraph == sub).map(SlinkReport::from).collect(),
                timeline: TimelineReport { length: st.timeline.length(), points },
            });
        }

        let mut pairs = Vec::new();
        for st in &tb.timelines {
            let offset = tb.global_offsets.get(&st.subgraph).copied();
            let compound_names = |c: usize| st.dag.compounds()[c].members.iter().map(point_name).collect::<Vec<_>>();
            for s in &st.table.sections {
                let nodes: BTreeSet<String> = st
                    .dag
                    .compounds()
                    .iter()
                    .filter(|c| (s.start..=s.end).contains(&st.timeline.position(c.index)))
                    .flat_map(|c| c.members.iter().map(|p| p.node.id.clone()))
                    .collect();
                report.indeterminate_sections.push(SectionReport {
                    subgraph: st.subgraph,
                    on_trunk: offset.is_some(),
                    start: s.start + offset.unwrap_or(0),
                    end: s.end + offset.unwrap_or(0),
                    nodes: nodes.into_iter().collect(),
                    pairs: s.pairs,
                });
            }
            if let Some(up) = &st.table.unordered_pairs {
                pairs.extend(up.iter().map(|&(a, b)| UnorderedPair { subgraph: st.subgraph, a: compound_names(a), b: compound_names(b) }));
            }
        }
        if self.options.indeterminacy == IndeterminacyMode::Full {
            report.unordered_pairs = Some(pairs);
        }
        report.intra_slinks = tb.intra_links.iter().map(SlinkReport::from).collect();
    }
}

impl DocumentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_graph, NodeId, SlinkRel, TemporalEntity, TlinkRel};

    fn ev(i: usize) -> NodeId {
        NodeId::event(format!("e{i}"))
    }

    fn graph(n: usize, links: Vec<TimeMLLink>) -> TimeMLGraph {
        let ents = (1..=n).map(|i| TemporalEntity::event(&format!("e{i}"), "x", i * 10)).collect();
        build_graph(ents, links, GraphOptions::default()).unwrap()
    }

    #[test]
    fn inconsistent_document_reports_cycles() {
        let g = graph(
            2,
            vec![
                TimeMLLink::tlink("l1", ev(1), ev(2), TlinkRel::Before),
                TimeMLLink::tlink("l2", ev(2), ev(1), TlinkRel::Before),
            ],
        );
        let a = analyze("d", &g, &AnalysisOptions::default()).unwrap();
        let r = a.report();
        assert!(!r.consistent);
        assert!(r.trunk.is_none());
        assert_eq!(r.mlic.len(), 1);
        assert_eq!(r.mlic[0].cycle_type, CycleType::TypeIII);
        let ids: Vec<&str> = r.mlic[0].links.iter().map(|l| l.link_id.as_str()).collect();
        assert_eq!(ids, ["l1", "l2"]);
    }

    #[test]
    fn alink_verdicts_differ() {
        // e1 begins e2 as an ALINK contradicts e2 before e1 only when ALINKs count
        let g = graph(
            2,
            vec![
                TimeMLLink::alink("l1", ev(1), ev(2), crate::model::AlinkRel::Initiates),
                TimeMLLink::tlink("l2", ev(2), ev(1), TlinkRel::Before),
            ],
        );
        let a = analyze("d", &g, &AnalysisOptions::default()).unwrap();
        assert_eq!((a.consistent_tlinks_only, a.consistent_with_alinks), (Some(true), Some(false)));
        let opts = AnalysisOptions { include_alinks: false, ..Default::default() };
        let b = analyze("d", &g, &opts).unwrap();
        assert!(b.is_consistent());
        assert_eq!((b.consistent_tlinks_only, b.consistent_with_alinks), (Some(true), Some(false)));
    }

    #[test]
    fn unlinked_events_are_concatenated_in_text_order() {
        let g = graph(2, vec![]);
        let r = analyze("d", &g, &AnalysisOptions::default()).unwrap().report();
        let trunk = r.trunk.unwrap();
        assert_eq!(trunk.length, 4);
        let order: Vec<(&str, u32)> = trunk.points.iter().map(|p| (p.node.as_str(), p.global_pos)).collect();
        assert_eq!(order, [("e1", 1), ("e1", 2), ("e2", 3), ("e2", 4)]);
        assert!(r.branches.is_empty());
    }

    #[test]
    fn full_mode_lists_pairs() {
        let g = graph(
            3,
            vec![
                TimeMLLink::tlink("l1", ev(1), ev(2), TlinkRel::Before),
                TimeMLLink::tlink("l2", ev(1), ev(3), TlinkRel::Before),
                TimeMLLink::slink("l3", ev(1), ev(2), SlinkRel::Modal),
            ],
        );
        let opts = AnalysisOptions { indeterminacy: IndeterminacyMode::Full, ..Default::default() };
        let r = analyze("d", &g, &opts).unwrap().report();
        // every endpoint of e2 is unordered with every endpoint of e3
        assert_eq!(r.unordered_pairs.as_ref().unwrap().len(), 4);
        assert_eq!(r.indeterminate_sections.len(), 1);
        assert_eq!(r.indeterminate_sections[0].nodes, ["e2", "e3"]);
        assert_eq!(r.intra_slinks.len(), 1);
        let none = AnalysisOptions { indeterminacy: IndeterminacyMode::None, ..Default::default() };
        assert!(analyze("d", &g, &none).unwrap().report().indeterminate_sections.is_empty());
    }
}
