//! Point-algebra translation: every interval becomes a start and an end
//! time-point, and every TLINK/ALINK becomes a conjunction of `<` and `=`
//! constraints between those points.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{AlinkRel, LinkRel, NodeId, TimeMLGraph, TimexClass, TlinkRel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointEnd {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimePoint {
    pub node: NodeId,
    pub end: PointEnd,
}

impl TimePoint {
    pub fn start(node: &NodeId) -> Self {
        TimePoint { node: node.clone(), end: PointEnd::Start }
    }

    pub fn end(node: &NodeId) -> Self {
        TimePoint { node: node.clone(), end: PointEnd::End }
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.end {
            PointEnd::Start => '⁻',
            PointEnd::End => '⁺',
        };
        write!(f, "{}{}", self.node, mark)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PaRel {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "=")]
    Equal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PAConstraint {
    pub lhs: TimePoint,
    pub rhs: TimePoint,
    pub rel: PaRel,
    /// Originating TimeML link; `None` for the implicit start-before-end
    /// constraint of each interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl PAConstraint {
    pub fn less(lhs: TimePoint, rhs: TimePoint) -> Self {
        PAConstraint { lhs, rhs, rel: PaRel::Less, provenance: None }
    }

    pub fn equal(lhs: TimePoint, rhs: TimePoint) -> Self {
        PAConstraint { lhs, rhs, rel: PaRel::Equal, provenance: None }
    }

    pub fn with_provenance(mut self, link_id: &str) -> Self {
        self.provenance = Some(link_id.to_string());
        self
    }
}

impl fmt::Display for PAConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            PaRel::Less => "<",
            PaRel::Equal => "=",
        };
        write!(f, "{} {} {}", self.lhs, op, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PAGraph {
    pub points: Vec<TimePoint>,
    pub constraints: Vec<PAConstraint>,
}

impl PAGraph {
    /// Builds a graph directly from constraints; the point set is every point
    /// mentioned plus `extra_points`.
    pub fn from_constraints(extra_points: impl IntoIterator<Item = TimePoint>, constraints: Vec<PAConstraint>) -> Self {
        let mut points: Vec<TimePoint> = extra_points
            .into_iter()
            .chain(constraints.iter().flat_map(|c| [c.lhs.clone(), c.rhs.clone()]))
            .collect();
        points.sort();
        points.dedup();
        PAGraph { points, constraints }
    }
}

impl AlinkRel {
    /// The TLINK with identical point-algebra constraints.
    pub fn temporal_equivalent(self) -> TlinkRel {
        match self {
            AlinkRel::Initiates => TlinkRel::Begins,
            AlinkRel::Culminates | AlinkRel::Terminates => TlinkRel::Ends,
            AlinkRel::Continues | AlinkRel::Reinitiates => TlinkRel::IsIncluded,
        }
    }
}

/// Point-algebra constraints imposed by `a REL b`. SLINKs carry no temporal
/// constraint and yield an empty list.
pub fn rel_constraints(rel: LinkRel, a: &NodeId, b: &NodeId) -> Vec<PAConstraint> {
    let tlink = match rel {
        LinkRel::Tlink(r) => r,
        LinkRel::Alink(r) => r.temporal_equivalent(),
        LinkRel::Slink(_) => return Vec::new(),
    };
    let (a0, a1, b0, b1) = (TimePoint::start(a), TimePoint::end(a), TimePoint::start(b), TimePoint::end(b));
    use PAConstraint as C;
    match tlink {
        TlinkRel::Before => vec![C::less(a1, b0)],
        TlinkRel::After => vec![C::less(b1, a0)],
        TlinkRel::Ibefore => vec![C::equal(a1, b0)],
        TlinkRel::Iafter => vec![C::equal(b1, a0)],
        TlinkRel::Begins => vec![C::equal(a0, b0), C::less(a1, b1)],
        TlinkRel::BegunBy => vec![C::equal(a0, b0), C::less(b1, a1)],
        TlinkRel::Ends => vec![C::less(b0, a0), C::equal(a1, b1)],
        TlinkRel::EndedBy => vec![C::less(a0, b0), C::equal(a1, b1)],
        TlinkRel::Includes => vec![C::less(a0, b0), C::less(b1, a1)],
        TlinkRel::IsIncluded => vec![C::less(b0, a0), C::less(a1, b1)],
        TlinkRel::Simultaneous | TlinkRel::Identity | TlinkRel::DuringInv => {
            vec![C::equal(a0, b0), C::equal(a1, b1)]
        }
        TlinkRel::During => vec![C::equal(b0, a0), C::equal(a1, b1)],
    }
}

/// Translates one temporally connected subgraph into its point-algebra graph.
/// TIME timexes denote an instant, so their two points are equated instead of
/// ordered. SLINKs, if present, are ignored.
pub fn transform(subgraph: &TimeMLGraph) -> PAGraph {
    let mut points = Vec::with_capacity(subgraph.n() * 2);
    let mut constraints = Vec::with_capacity(subgraph.n() + 2 * subgraph.links().len());
    for entity in subgraph.nodes() {
        let (s, e) = (TimePoint::start(&entity.node), TimePoint::end(&entity.node));
        points.push(s.clone());
        points.push(e.clone());
        if entity.timex_class == Some(TimexClass::Time) {
            constraints.push(PAConstraint::equal(s, e));
        } else {
            constraints.push(PAConstraint::less(s, e));
        }
    }
    let mut equalities: HashSet<(TimePoint, TimePoint)> = constraints
        .iter()
        .filter(|c| c.rel == PaRel::Equal)
        .map(|c| unordered(&c.lhs, &c.rhs))
        .collect();
    for link in subgraph.links() {
        for c in rel_constraints(link.rel, &link.source, &link.target) {
            if c.rel == PaRel::Equal && (c.lhs == c.rhs || !equalities.insert(unordered(&c.lhs, &c.rhs))) {
                continue;
            }
            constraints.push(c.with_provenance(&link.link_id));
        }
    }
    points.sort();
    PAGraph { points, constraints }
}

fn unordered(a: &TimePoint, b: &TimePoint) -> (TimePoint, TimePoint) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}
