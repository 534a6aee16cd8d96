//! In-memory TimeML temporal graph: events, time expressions and the
//! temporal (TLINK), subordinating (SLINK) and aspectual (ALINK) links
//! between them.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    EventInstance,
    Timex,
}

/// Identity of a graph vertex: an event instance id (`ei5`) or a timex id (`t3`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub id: String,
}

impl NodeId {
    pub fn event(id: impl Into<String>) -> Self {
        NodeId { kind: NodeKind::EventInstance, id: id.into() }
    }

    pub fn timex(id: impl Into<String>) -> Self {
        NodeId { kind: NodeKind::Timex, id: id.into() }
    }

    pub fn is_timex(&self) -> bool {
        self.kind == NodeKind::Timex
    }
}

// Ids are unique within a document, so ordering by the id string alone is total
// in practice; kind only breaks ties between malformed inputs.
impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id).then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TimexClass {
    Date,
    Time,
    Duration,
    Set,
}

impl TimexClass {
    pub fn as_timeml(self) -> &'static str {
        match self {
            TimexClass::Date => "DATE",
            TimexClass::Time => "TIME",
            TimexClass::Duration => "DURATION",
            TimexClass::Set => "SET",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DATE" => Some(TimexClass::Date),
            "TIME" => Some(TimexClass::Time),
            "DURATION" => Some(TimexClass::Duration),
            "SET" => Some(TimexClass::Set),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalEntity {
    pub node: NodeId,
    pub surface_text: String,
    /// Character index of the entity in the tag-stripped source text.
    pub char_offset: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timex_class: Option<TimexClass>,
}

impl TemporalEntity {
    pub fn event(id: &str, text: &str, char_offset: usize) -> Self {
        TemporalEntity {
            node: NodeId::event(id),
            surface_text: text.to_string(),
            char_offset,
            timex_class: None,
        }
    }

    pub fn timex(id: &str, class: TimexClass, text: &str, char_offset: usize) -> Self {
        TemporalEntity {
            node: NodeId::timex(id),
            surface_text: text.to_string(),
            char_offset,
            timex_class: Some(class),
        }
    }
}

/// Lowercases and strips `_`/`-` so that `I_BEFORE`, `ibefore` and
/// `IBEFORE` all compare equal.
fn normalize_rel(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

macro_rules! rel_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => $canon:literal [$($alias:literal),*]),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// TimeML `relType` spelling, e.g. `IS_INCLUDED`.
            pub fn as_timeml(self) -> &'static str {
                match self {
                    $($name::$variant => $canon),+
                }
            }

            /// Case-insensitive match against the TimeML spelling, ignoring
            /// underscores and hyphens.
            pub fn parse(s: &str) -> Option<Self> {
                let norm = normalize_rel(s);
                $(
                    if norm == normalize_rel($canon) $(|| norm == $alias)* {
                        return Some($name::$variant);
                    }
                )+
                None
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_timeml())
            }
        }
    };
}

rel_enum! {
    /// The 14 temporal relation types of a TLINK.
    TlinkRel {
        Before => "BEFORE" [],
        After => "AFTER" [],
        Ibefore => "IBEFORE" [],
        Iafter => "IAFTER" [],
        Begins => "BEGINS" [],
        BegunBy => "BEGUN_BY" [],
        Ends => "ENDS" [],
        EndedBy => "ENDED_BY" [],
        Includes => "INCLUDES" [],
        IsIncluded => "IS_INCLUDED" [],
        Simultaneous => "SIMULTANEOUS" [],
        Identity => "IDENTITY" [],
        During => "DURING" [],
        DuringInv => "DURING_INV" [],
    }
}

rel_enum! {
    /// The six subordination types of an SLINK.
    SlinkRel {
        Modal => "MODAL" [],
        Factive => "FACTIVE" [],
        CounterFactive => "COUNTER_FACTIVE" [],
        Evidential => "EVIDENTIAL" [],
        NegativeEvidential => "NEG_EVIDENTIAL" ["negativeevidential"],
        Conditional => "CONDITIONAL" [],
    }
}

rel_enum! {
    /// The five aspectual relation types of an ALINK.
    AlinkRel {
        Initiates => "INITIATES" [],
        Reinitiates => "REINITIATES" [],
        Terminates => "TERMINATES" [],
        Culminates => "CULMINATES" [],
        Continues => "CONTINUES" [],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LinkKind {
    Tlink,
    Slink,
    Alink,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Tlink => "TLINK",
            LinkKind::Slink => "SLINK",
            LinkKind::Alink => "ALINK",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rel", rename_all = "UPPERCASE")]
pub enum LinkRel {
    Tlink(TlinkRel),
    Slink(SlinkRel),
    Alink(AlinkRel),
}

impl LinkRel {
    pub fn kind(self) -> LinkKind {
        match self {
            LinkRel::Tlink(_) => LinkKind::Tlink,
            LinkRel::Slink(_) => LinkKind::Slink,
            LinkRel::Alink(_) => LinkKind::Alink,
        }
    }

    /// Parses a `relType` value for a link of the given kind.
    pub fn parse(kind: LinkKind, s: &str) -> Option<Self> {
        match kind {
            LinkKind::Tlink => TlinkRel::parse(s).map(LinkRel::Tlink),
            LinkKind::Slink => SlinkRel::parse(s).map(LinkRel::Slink),
            LinkKind::Alink => AlinkRel::parse(s).map(LinkRel::Alink),
        }
    }
}

impl fmt::Display for LinkRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkRel::Tlink(r) => write!(f, "TLINK {r}"),
            LinkRel::Slink(r) => write!(f, "SLINK {r}"),
            LinkRel::Alink(r) => write!(f, "ALINK {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeMLLink {
    pub link_id: String,
    pub source: NodeId,
    pub target: NodeId,
    #[serde(flatten)]
    pub rel: LinkRel,
}

impl TimeMLLink {
    pub fn new(link_id: &str, source: NodeId, target: NodeId, rel: LinkRel) -> Self {
        TimeMLLink { link_id: link_id.to_string(), source, target, rel }
    }

    pub fn tlink(link_id: &str, source: NodeId, target: NodeId, rel: TlinkRel) -> Self {
        Self::new(link_id, source, target, LinkRel::Tlink(rel))
    }

    pub fn slink(link_id: &str, source: NodeId, target: NodeId, rel: SlinkRel) -> Self {
        Self::new(link_id, source, target, LinkRel::Slink(rel))
    }

    pub fn alink(link_id: &str, source: NodeId, target: NodeId, rel: AlinkRel) -> Self {
        Self::new(link_id, source, target, LinkRel::Alink(rel))
    }

    pub fn kind(&self) -> LinkKind {
        self.rel.kind()
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Remove links whose source equals their target, recording a warning.
    pub drop_self_loops: bool,
    /// When false, ALINKs are discarded before validation (TLINK-only runs).
    pub include_alinks: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { drop_self_loops: true, include_alinks: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("link {link_id} references unknown node {node}")]
    DanglingEndpoint { link_id: String, node: String },
    #[error("conflicting {kind}s from {from} to {to}: {first} vs {second}")]
    DuplicateLink {
        from: String,
        to: String,
        kind: LinkKind,
        first: String,
        second: String,
    },
    #[error("link {link_id}: SLINK/ALINK endpoints must both be event instances")]
    SlinkOnTimex { link_id: String },
    #[error("node id {0} declared more than once")]
    DuplicateNode(String),
    #[error("empty node id")]
    EmptyId,
    #[error("timex class must be present exactly for timex nodes ({0})")]
    TimexClassMismatch(String),
}

/// A validated TimeML graph. Nodes are sorted by id and links by link id, so
/// two graphs built from the same entities and links compare equal regardless
/// of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeMLGraph {
    nodes: Vec<TemporalEntity>,
    links: Vec<TimeMLLink>,
    warnings: Vec<String>,
    index: HashMap<String, usize>,
}

/// Serialized shape of a graph; deserializing revalidates through
/// [`build_graph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphDump {
    n: usize,
    m: usize,
    nodes: Vec<TemporalEntity>,
    links: Vec<TimeMLLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

pub fn build_graph(
    entities: Vec<TemporalEntity>,
    links: Vec<TimeMLLink>,
    options: GraphOptions,
) -> Result<TimeMLGraph, GraphError> {
    let mut nodes = entities;
    nodes.sort_by(|a, b| a.node.cmp(&b.node));
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, e) in nodes.iter().enumerate() {
        if e.node.id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        if e.node.is_timex() != e.timex_class.is_some() {
            return Err(GraphError::TimexClassMismatch(e.node.id.clone()));
        }
        if index.insert(e.node.id.clone(), i).is_some() {
            return Err(GraphError::DuplicateNode(e.node.id.clone()));
        }
    }

    let mut links = links;
    links.sort_by(|a, b| {
        a.link_id
            .cmp(&b.link_id)
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
            .then_with(|| a.rel.cmp(&b.rel))
    });

    let mut warnings = Vec::new();
    let mut kept: Vec<TimeMLLink> = Vec::with_capacity(links.len());
    let mut by_pair: HashMap<(LinkKind, &str, &str), usize> = HashMap::new();
    let mut dropped_alinks = 0usize;
    // Validation first, then dedup; indices into `links` keep borrows simple.
    let mut keep = vec![false; links.len()];
    for (i, link) in links.iter().enumerate() {
        for end in [&link.source, &link.target] {
            match index.get(&end.id) {
                Some(&j) if nodes[j].node.kind == end.kind => {}
                _ => {
                    return Err(GraphError::DanglingEndpoint {
                        link_id: link.link_id.clone(),
                        node: end.id.clone(),
                    })
                }
            }
        }
        if link.kind() != LinkKind::Tlink && (link.source.is_timex() || link.target.is_timex()) {
            return Err(GraphError::SlinkOnTimex { link_id: link.link_id.clone() });
        }
        if link.kind() == LinkKind::Alink && !options.include_alinks {
            dropped_alinks += 1;
            continue;
        }
        if link.is_self_loop() && options.drop_self_loops {
            warnings.push(format!(
                "dropped self-loop {} ({} {} {})",
                link.link_id,
                link.source,
                link.rel,
                link.target
            ));
            continue;
        }
        let key = (link.kind(), link.source.id.as_str(), link.target.id.as_str());
        match by_pair.get(&key) {
            Some(&prev) if links[prev].rel == link.rel => {}
            Some(&prev) if link.kind() != LinkKind::Slink => {
                return Err(GraphError::DuplicateLink {
                    from: link.source.id.clone(),
                    to: link.target.id.clone(),
                    kind: link.kind(),
                    first: format!("{} {}", links[prev].link_id, links[prev].rel),
                    second: format!("{} {}", link.link_id, link.rel),
                });
            }
            Some(_) => keep[i] = true,
            None => {
                by_pair.insert(key, i);
                keep[i] = true;
            }
        }
    }
    if dropped_alinks > 0 {
        warnings.push(format!("excluded {dropped_alinks} ALINK(s)"));
    }
    for (link, k) in links.into_iter().zip(keep) {
        if k {
            kept.push(link);
        }
    }

    Ok(TimeMLGraph { nodes, links: kept, warnings, index })
}

impl TimeMLGraph {
    pub fn nodes(&self) -> &[TemporalEntity] {
        &self.nodes
    }

    pub fn links(&self) -> &[TimeMLLink] {
        &self.links
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub(crate) fn prepend_warnings(&mut self, mut warnings: Vec<String>) {
        warnings.append(&mut self.warnings);
        self.warnings = warnings;
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Number of distinct ordered node pairs joined by at least one link.
    pub fn m(&self) -> usize {
        self.links
            .iter()
            .map(|l| (&l.source.id, &l.target.id))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn entity(&self, id: &str) -> Option<&TemporalEntity> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn has_kind(&self, kind: LinkKind) -> bool {
        self.links.iter().any(|l| l.kind() == kind)
    }

    /// Builds the subgraph induced by `ids`, keeping only links that satisfy
    /// `keep` and whose endpoints both lie inside the subgraph.
    pub fn induced<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a str>,
        keep: impl Fn(&TimeMLLink) -> bool,
    ) -> TimeMLGraph {
        let mut nodes: Vec<TemporalEntity> = ids
            .into_iter()
            .filter_map(|id| self.entity(id).cloned())
            .collect();
        nodes.sort_by(|a, b| a.node.cmp(&b.node));
        nodes.dedup_by(|a, b| a.node == b.node);
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, e)| (e.node.id.clone(), i)).collect();
        let links = self
            .links
            .iter()
            .filter(|l| keep(l) && index.contains_key(&l.source.id) && index.contains_key(&l.target.id))
            .cloned()
            .collect();
        TimeMLGraph { nodes, links, warnings: Vec::new(), index }
    }

    /// Canonical JSON: stable field order, nodes sorted by id, links by link id.
    pub fn to_canonical_json(&self) -> String {
        let dump = GraphDump {
            n: self.n(),
            m: self.m(),
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            warnings: self.warnings.clone(),
        };
        serde_json::to_string_pretty(&dump).expect("graph serialization is infallible")
    }

    /// Reloads a graph written by [`TimeMLGraph::to_canonical_json`]. The
    /// input is revalidated; self-loops and ALINKs are kept as stored.
    pub fn from_json(s: &str) -> Result<TimeMLGraph, GraphLoadError> {
        let dump: GraphDump = serde_json::from_str(s)?;
        let options = GraphOptions { drop_self_loops: false, include_alinks: true };
        let mut graph = build_graph(dump.nodes, dump.links, options)?;
        graph.warnings = dump.warnings;
        Ok(graph)
    }

    /// Applies `options` to an already-built graph, e.g. to derive the
    /// TLINK-only view of a document.
    pub fn with_options(&self, options: GraphOptions) -> Result<TimeMLGraph, GraphError> {
        let mut g = build_graph(self.nodes.clone(), self.links.clone(), options)?;
        let mut warnings = self.warnings.clone();
        warnings.append(&mut g.warnings);
        g.warnings = warnings;
        Ok(g)
    }
}

#[derive(Debug, Error)]
pub enum GraphLoadError {
    #[error("invalid graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn went_monday() -> (Vec<TemporalEntity>, NodeId, NodeId) {
        let went = TemporalEntity::event("ei1", "went", 6);
        let monday = TemporalEntity::timex("t1", TimexClass::Date, "Monday", 24);
        let (a, b) = (went.node.clone(), monday.node.clone());
        (vec![went, monday], a, b)
    }

    #[test]
    fn relation_vocabulary_sizes() {
        assert_eq!(TlinkRel::ALL.len(), 14);
        assert_eq!(SlinkRel::ALL.len(), 6);
        assert_eq!(AlinkRel::ALL.len(), 5);
    }

    #[test]
    fn relation_parsing_is_lenient() {
        assert_eq!(TlinkRel::parse("I_BEFORE"), Some(TlinkRel::Ibefore));
        assert_eq!(TlinkRel::parse("ibefore"), Some(TlinkRel::Ibefore));
        assert_eq!(TlinkRel::parse("is_included"), Some(TlinkRel::IsIncluded));
        assert_eq!(TlinkRel::parse("BEFOREX"), None);
        assert_eq!(SlinkRel::parse("NEG_EVIDENTIAL"), Some(SlinkRel::NegativeEvidential));
        assert_eq!(SlinkRel::parse("negative_evidential"), Some(SlinkRel::NegativeEvidential));
        for r in TlinkRel::ALL {
            assert_eq!(TlinkRel::parse(r.as_timeml()), Some(*r));
        }
    }

    #[test]
    fn single_tlink() {
        let (ents, a, b) = went_monday();
        let g = build_graph(
            ents,
            vec![TimeMLLink::tlink("l1", a, b, TlinkRel::IsIncluded)],
            GraphOptions::default(),
        )
        .unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
    }

    #[test]
    fn conflicting_tlinks_rejected() {
        let (ents, a, b) = went_monday();
        let err = build_graph(
            ents,
            vec![
                TimeMLLink::tlink("l1", a.clone(), b.clone(), TlinkRel::Before),
                TimeMLLink::tlink("l2", a, b, TlinkRel::After),
            ],
            GraphOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateLink { kind: LinkKind::Tlink, .. }));
    }

    #[test]
    fn identical_duplicates_collapse() {
        let (ents, a, b) = went_monday();
        let g = build_graph(
            ents,
            vec![
                TimeMLLink::tlink("l2", a.clone(), b.clone(), TlinkRel::Before),
                TimeMLLink::tlink("l1", a, b, TlinkRel::Before),
            ],
            GraphOptions::default(),
        )
        .unwrap();
        assert_eq!(g.links().len(), 1);
        assert_eq!(g.links()[0].link_id, "l1");
    }

    #[test]
    fn self_loop_dropped_with_warning() {
        let e = TemporalEntity::event("ei1", "ran", 0);
        let a = e.node.clone();
        let g = build_graph(
            vec![e.clone()],
            vec![TimeMLLink::tlink("l1", a.clone(), a.clone(), TlinkRel::Before)],
            GraphOptions::default(),
        )
        .unwrap();
        assert!(g.links().is_empty());
        assert_eq!(g.warnings().len(), 1);

        let kept = build_graph(
            vec![e],
            vec![TimeMLLink::tlink("l1", a.clone(), a, TlinkRel::Before)],
            GraphOptions { drop_self_loops: false, ..Default::default() },
        )
        .unwrap();
        assert_eq!(kept.links().len(), 1);
    }

    #[test]
    fn dangling_and_timex_errors() {
        let (ents, a, b) = went_monday();
        let err = build_graph(
            ents.clone(),
            vec![TimeMLLink::tlink("l1", a.clone(), NodeId::event("ei9"), TlinkRel::Before)],
            GraphOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, GraphError::DanglingEndpoint { link_id: "l1".into(), node: "ei9".into() });

        let err = build_graph(
            ents,
            vec![TimeMLLink::slink("l2", a, b, SlinkRel::Modal)],
            GraphOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, GraphError::SlinkOnTimex { link_id: "l2".into() });
    }

    #[test]
    fn alinks_excluded_on_request() {
        let a = TemporalEntity::event("ei1", "started", 0);
        let b = TemporalEntity::event("ei2", "study", 12);
        let link = TimeMLLink::alink("l1", a.node.clone(), b.node.clone(), AlinkRel::Initiates);
        let g = build_graph(
            vec![a, b],
            vec![link],
            GraphOptions { include_alinks: false, ..Default::default() },
        )
        .unwrap();
        assert!(g.links().is_empty());
    }

    #[test]
    fn canonical_json_roundtrip_and_order_independence() {
        let (mut ents, a, b) = went_monday();
        let links = vec![
            TimeMLLink::tlink("l1", a.clone(), b.clone(), TlinkRel::IsIncluded),
            TimeMLLink::tlink("l0", b, a, TlinkRel::Includes),
        ];
        let g1 = build_graph(ents.clone(), links.clone(), GraphOptions::default()).unwrap();
        ents.reverse();
        let mut rev = links;
        rev.reverse();
        let g2 = build_graph(ents, rev, GraphOptions::default()).unwrap();
        assert_eq!(g1, g2);
        let json = g1.to_canonical_json();
        assert_eq!(json, g2.to_canonical_json());
        let back = TimeMLGraph::from_json(&json).unwrap();
        assert_eq!(back, g1);
        assert_eq!(back.m(), 2);
    }
}
