//! Splits a TimeML graph into subgraphs that are connected only through
//! temporal and aspectual links, and records the subordinating links that
//! join them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{LinkKind, LinkRel, NodeId, SlinkRel, TimeMLGraph, TimeMLLink};

/// Endpoints of an SLINK whose source and target fall in different subgraphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectingPoint {
    pub source: NodeId,
    pub target: NodeId,
    pub link_id: String,
    pub rel: SlinkRel,
    pub source_subgraph: usize,
    pub target_subgraph: usize,
}

#[derive(Debug, Clone)]
pub struct Partition {
    /// Node-disjoint subgraphs holding only TLINKs and ALINKs, ordered by
    /// the earliest text offset of their members.
    pub subgraphs: Vec<TimeMLGraph>,
    /// Every SLINK of the input graph, in link-id order.
    pub slinks: Vec<TimeMLLink>,
    /// Cross-subgraph SLINKs, in text order of their source node.
    pub connecting_points: Vec<ConnectingPoint>,
    membership: HashMap<String, usize>,
}

impl Partition {
    pub fn subgraph_of(&self, id: &str) -> Option<usize> {
        self.membership.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    /// SLINKs whose endpoints share a subgraph; they produce no connecting point.
    pub fn intra_slinks(&self) -> impl Iterator<Item = &TimeMLLink> {
        self.slinks
            .iter()
            .filter(|l| self.subgraph_of(&l.source.id) == self.subgraph_of(&l.target.id))
    }
}

fn is_temporal(link: &TimeMLLink) -> bool {
    link.kind() != LinkKind::Slink
}

pub fn partition(graph: &TimeMLGraph) -> Partition {
    let nodes = graph.nodes();
    let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, e)| (e.node.id.as_str(), i)).collect();

    // undirected adjacency over TLINK/ALINK; node order is lexicographic by id
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for link in graph.links().iter().filter(|l| is_temporal(l)) {
        let (u, v) = (index[link.source.id.as_str()], index[link.target.id.as_str()]);
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut component = vec![usize::MAX; nodes.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..nodes.len() {
        if component[root] != usize::MAX {
            continue;
        }
        let id = groups.len();
        component[root] = id;
        let mut members = vec![root];
        stack.push((root, 0));
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&v) = adj[u].get(*next) {
                *next += 1;
                if component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                    stack.push((v, 0));
                }
            } else {
                stack.pop();
            }
        }
        groups.push(members);
    }

    let key = |members: &Vec<usize>| {
        members
            .iter()
            .map(|&i| (nodes[i].char_offset, &nodes[i].node.id))
            .min()
            .expect("components are non-empty")
    };
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| key(&groups[a]).cmp(&key(&groups[b])));

    let mut membership = HashMap::with_capacity(nodes.len());
    let mut subgraphs = Vec::with_capacity(groups.len());
    for (rank, &g) in order.iter().enumerate() {
        for &i in &groups[g] {
            membership.insert(nodes[i].node.id.clone(), rank);
        }
        subgraphs.push(graph.induced(groups[g].iter().map(|&i| nodes[i].node.id.as_str()), is_temporal));
    }

    let slinks: Vec<TimeMLLink> = graph.links().iter().filter(|l| !is_temporal(l)).cloned().collect();
    let mut connecting_points: Vec<ConnectingPoint> = slinks
        .iter()
        .filter_map(|l| {
            let (s, t) = (membership[&l.source.id], membership[&l.target.id]);
            let LinkRel::Slink(rel) = l.rel else { return None };
            (s != t).then(|| ConnectingPoint {
                source: l.source.clone(),
                target: l.target.clone(),
                link_id: l.link_id.clone(),
                rel,
                source_subgraph: s,
                target_subgraph: t,
            })
        })
        .collect();
    let offset = |n: &NodeId| graph.entity(&n.id).map_or(0, |e| e.char_offset);
    connecting_points.sort_by(|a, b| {
        (offset(&a.source), &a.link_id).cmp(&(offset(&b.source), &b.link_id))
    });

    Partition { subgraphs, slinks, connecting_points, membership }
}
