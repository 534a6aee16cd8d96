//! Consistency checking of point-algebra graphs.
//!
//! Time-points joined by `=` are merged into compound points. Every `<`
//! constraint is then classified against a table of ordered compound pairs:
//!
//! * type I: both endpoints fall in the same compound (`v = … = w < v`);
//! * type II: the reverse compound pair is already ordered (a two-compound
//!   cycle);
//! * type III: a longer cycle, found by DFS on the remaining compound graph.
//!   Each back edge yields one cycle, recovered from the DFS stack, and the
//!   closing edge is dropped before the search continues.
//!
//! The resulting list of inconsistent cycles is maximal relative to this
//! procedure; it is not an enumeration of every simple cycle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::pa::{PAConstraint, PAGraph, PaRel, TimePoint};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundPoint {
    pub index: usize,
    /// Sorted; never empty.
    pub members: Vec<TimePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundEdge {
    pub from: usize,
    pub to: usize,
    /// First `<` constraint that produced this edge.
    pub witness: PAConstraint,
    /// Provenance of every parallel constraint between the two compounds.
    pub link_ids: BTreeSet<String>,
}

/// Equality-merged constraint graph in which every edge means `<`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompoundDAG {
    compounds: Vec<CompoundPoint>,
    edges: Vec<CompoundEdge>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    point_to_compound: HashMap<TimePoint, usize>,
}

impl CompoundDAG {
    fn new(compounds: Vec<CompoundPoint>, mut edges: Vec<CompoundEdge>, point_to_compound: HashMap<TimePoint, usize>) -> Self {
        edges.sort_by_key(|e| (e.from, e.to));
        let mut succ = vec![Vec::new(); compounds.len()];
        let mut pred = vec![Vec::new(); compounds.len()];
        for e in &edges {
            succ[e.from].push(e.to);
            pred[e.to].push(e.from);
        }
        for p in &mut pred {
            p.sort_unstable();
        }
        CompoundDAG { compounds, edges, succ, pred, point_to_compound }
    }

    /// A graph of `n` singleton compounds with the given `<` edges. The
    /// members are synthetic points `c0⁻ … c{n-1}⁻`. Acyclicity is the
    /// caller's responsibility.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let compounds: Vec<CompoundPoint> = (0..n)
            .map(|i| CompoundPoint {
                index: i,
                members: vec![TimePoint::start(&crate::model::NodeId::event(format!("c{i}")))],
            })
            .collect();
        let point_to_compound = compounds.iter().map(|c| (c.members[0].clone(), c.index)).collect();
        let mut seen = HashSet::new();
        let edges = edges
            .iter()
            .filter(|&&(a, b)| seen.insert((a, b)))
            .map(|&(a, b)| CompoundEdge {
                from: a,
                to: b,
                witness: PAConstraint::less(compounds[a].members[0].clone(), compounds[b].members[0].clone()),
                link_ids: BTreeSet::new(),
            })
            .collect();
        Self::new(compounds, edges, point_to_compound)
    }

    pub fn len(&self) -> usize {
        self.compounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compounds.is_empty()
    }

    pub fn compounds(&self) -> &[CompoundPoint] {
        &self.compounds
    }

    pub fn edges(&self) -> &[CompoundEdge] {
        &self.edges
    }

    pub fn successors(&self, c: usize) -> &[usize] {
        &self.succ[c]
    }

    pub fn predecessors(&self, c: usize) -> &[usize] {
        &self.pred[c]
    }

    pub fn compound_of(&self, p: &TimePoint) -> Option<usize> {
        self.point_to_compound.get(p).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CycleType {
    TypeI,
    TypeII,
    TypeIII,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconsistentCycle {
    pub cycle_type: CycleType,
    /// Type I/II: every member of the implicated compounds. Type III: the
    /// time-point walk around the cycle.
    pub points: Vec<TimePoint>,
    pub link_ids: BTreeSet<String>,
    /// A set of constraints that is inconsistent on its own.
    pub constraints: Vec<PAConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub cycles: Vec<InconsistentCycle>,
}

impl InconsistencyReport {
    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn link_ids(&self) -> BTreeSet<String> {
        self.cycles.iter().flat_map(|c| c.link_ids.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone)]
pub enum CheckOutcome {
    Consistent(CompoundDAG),
    Inconsistent(InconsistencyReport),
}

impl CheckOutcome {
    pub fn is_consistent(&self) -> bool {
        matches!(self, CheckOutcome::Consistent(_))
    }
}

/// Equality-only adjacency used to explain why two points share a compound.
struct EqualityIndex<'a> {
    adj: HashMap<&'a TimePoint, Vec<(&'a TimePoint, &'a PAConstraint)>>,
}

impl<'a> EqualityIndex<'a> {
    fn new(pa: &'a PAGraph) -> Self {
        let mut adj: HashMap<&TimePoint, Vec<(&TimePoint, &PAConstraint)>> = HashMap::new();
        for c in pa.constraints.iter().filter(|c| c.rel == PaRel::Equal) {
            adj.entry(&c.lhs).or_default().push((&c.rhs, c));
            adj.entry(&c.rhs).or_default().push((&c.lhs, c));
        }
        EqualityIndex { adj }
    }

    /// Equality constraints along a shortest path from `from` to `to`.
    fn path(&self, from: &'a TimePoint, to: &'a TimePoint) -> Vec<&'a PAConstraint> {
        if from == to {
            return Vec::new();
        }
        let mut parent: HashMap<&TimePoint, (&TimePoint, &PAConstraint)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = HashSet::from([from]);
        while let Some(u) = queue.pop_front() {
            for &(v, c) in self.adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(v) {
                    parent.insert(v, (u, c));
                    if v == to {
                        let mut out = Vec::new();
                        let mut cur = to;
                        while let Some(&(p, c)) = parent.get(cur) {
                            out.push(c);
                            cur = p;
                        }
                        out.reverse();
                        return out;
                    }
                    queue.push_back(v);
                }
            }
        }
        Vec::new()
    }
}

/// Groups time-points connected by `=` into compound points. Indices follow
/// the order of each compound's smallest member.
pub fn merge_equalities(pa: &PAGraph) -> (Vec<CompoundPoint>, HashMap<TimePoint, usize>) {
    let mut points: Vec<&TimePoint> = pa
        .points
        .iter()
        .chain(pa.constraints.iter().flat_map(|c| [&c.lhs, &c.rhs]))
        .collect();
    points.sort();
    points.dedup();
    let index: HashMap<&TimePoint, usize> = points.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for c in pa.constraints.iter().filter(|c| c.rel == PaRel::Equal) {
        let (u, v) = (index[&c.lhs], index[&c.rhs]);
        adj[u].push(v);
        adj[v].push(u);
    }

    let mut comp = vec![usize::MAX; points.len()];
    let mut compounds = Vec::new();
    for root in 0..points.len() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = compounds.len();
        comp[root] = id;
        let mut members = vec![root];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        compounds.push(CompoundPoint { index: id, members: members.into_iter().map(|i| points[i].clone()).collect() });
    }
    let mapping = points.iter().enumerate().map(|(i, p)| ((*p).clone(), comp[i])).collect();
    (compounds, mapping)
}

fn provenance<'a>(cs: impl IntoIterator<Item = &'a PAConstraint>) -> Vec<String> {
    cs.into_iter().filter_map(|c| c.provenance.clone()).collect()
}

pub fn check(pa: &PAGraph) -> CheckOutcome {
    let (compounds, mapping) = merge_equalities(pa);
    let eq = EqualityIndex::new(pa);
    let mut cycles = Vec::new();

    // type I, grouped per compound: (witness, all offending constraints)
    let mut type_one: BTreeMap<usize, Vec<&PAConstraint>> = BTreeMap::new();
    // the table of ordered compound pairs, with every constraint behind each entry
    let mut table: HashMap<(usize, usize), Vec<&PAConstraint>> = HashMap::new();
    let mut pair_order: Vec<(usize, usize)> = Vec::new();
    let mut conflicts: Vec<(usize, usize)> = Vec::new();
    let mut conflicting: HashSet<(usize, usize)> = HashSet::new();

    for c in pa.constraints.iter().filter(|c| c.rel == PaRel::Less) {
        let (i, j) = (mapping[&c.lhs], mapping[&c.rhs]);
        if i == j {
            type_one.entry(i).or_default().push(c);
            continue;
        }
        let entry = table.entry((i, j)).or_default();
        if entry.is_empty() {
            pair_order.push((i, j));
        }
        entry.push(c);
        if table.contains_key(&(j, i)) {
            let key = (i.min(j), i.max(j));
            if conflicting.insert(key) {
                conflicts.push((j, i));
            }
        }
    }

    for (compound, offending) in &type_one {
        let mut link_ids: BTreeSet<String> = BTreeSet::new();
        for c in offending {
            link_ids.extend(provenance([*c]));
            link_ids.extend(provenance(eq.path(&c.rhs, &c.lhs)));
        }
        let witness = offending[0];
        let mut constraints = vec![witness.clone()];
        constraints.extend(eq.path(&witness.rhs, &witness.lhs).into_iter().cloned());
        cycles.push(InconsistentCycle {
            cycle_type: CycleType::TypeI,
            points: compounds[*compound].members.clone(),
            link_ids,
            constraints,
        });
    }

    for &(i, j) in &conflicts {
        let fwd = table[&(i, j)][0];
        let back = table[&(j, i)][0];
        let mut constraints = vec![fwd.clone()];
        constraints.extend(eq.path(&fwd.rhs, &back.lhs).into_iter().cloned());
        constraints.push(back.clone());
        constraints.extend(eq.path(&back.rhs, &fwd.lhs).into_iter().cloned());
        let mut link_ids: BTreeSet<String> = provenance(&constraints).into_iter().collect();
        link_ids.extend(provenance(table[&(i, j)].iter().copied()));
        link_ids.extend(provenance(table[&(j, i)].iter().copied()));
        let mut points = compounds[i].members.clone();
        points.extend(compounds[j].members.iter().cloned());
        points.sort();
        cycles.push(InconsistentCycle { cycle_type: CycleType::TypeII, points, link_ids, constraints });
    }

    // remaining edges: both directions of a type II pair are excluded
    let edges: Vec<CompoundEdge> = pair_order
        .iter()
        .filter(|(i, j)| !conflicting.contains(&((*i).min(*j), (*i).max(*j))))
        .map(|&(i, j)| {
            let cs = &table[&(i, j)];
            CompoundEdge { from: i, to: j, witness: cs[0].clone(), link_ids: provenance(cs.iter().copied()).into_iter().collect() }
        })
        .collect();
    let dag = CompoundDAG::new(compounds, edges, mapping);

    cycles.extend(find_cycles(&dag, &eq));

    if cycles.is_empty() {
        CheckOutcome::Consistent(dag)
    } else {
        CheckOutcome::Inconsistent(InconsistencyReport { cycles })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Color {
    White,
    Gray,
    Black,
}

/// Type III search: iterative DFS in compound-index order; each edge into a
/// gray vertex closes a cycle, which is recorded and the edge discarded.
fn find_cycles(dag: &CompoundDAG, eq: &EqualityIndex<'_>) -> Vec<InconsistentCycle> {
    let edge_at: HashMap<(usize, usize), &CompoundEdge> = dag.edges.iter().map(|e| ((e.from, e.to), e)).collect();
    let mut color = vec![Color::White; dag.len()];
    let mut cycles = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for root in 0..dag.len() {
        if color[root] != Color::White {
            continue;
        }
        color[root] = Color::Gray;
        stack.push((root, 0));
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            let Some(&v) = dag.succ[u].get(*next) else {
                color[u] = Color::Black;
                stack.pop();
                continue;
            };
            *next += 1;
            match color[v] {
                Color::White => {
                    color[v] = Color::Gray;
                    stack.push((v, 0));
                }
                Color::Gray => {
                    // the gray vertex is an ancestor; its tree path to u is on the stack
                    let start = stack.iter().position(|&(w, _)| w == v).expect("gray vertex is on the stack");
                    let mut walk: Vec<usize> = stack[start..].iter().map(|&(w, _)| w).collect();
                    walk.push(v);
                    cycles.push(cycle_from_walk(&walk, &edge_at, eq));
                }
                Color::Black => {}
            }
        }
    }
    cycles
}

fn cycle_from_walk(
    walk: &[usize],
    edge_at: &HashMap<(usize, usize), &CompoundEdge>,
    eq: &EqualityIndex<'_>,
) -> InconsistentCycle {
    let hops: Vec<&CompoundEdge> = walk.windows(2).map(|w| edge_at[&(w[0], w[1])]).collect();
    let mut constraints = Vec::new();
    let mut points: Vec<TimePoint> = Vec::new();
    let mut link_ids = BTreeSet::new();
    for (k, hop) in hops.iter().enumerate() {
        let next = hops[(k + 1) % hops.len()];
        link_ids.extend(hop.link_ids.iter().cloned());
        constraints.push(hop.witness.clone());
        if points.last() != Some(&hop.witness.lhs) {
            points.push(hop.witness.lhs.clone());
        }
        points.push(hop.witness.rhs.clone());
        for c in eq.path(&hop.witness.rhs, &next.witness.lhs) {
            link_ids.extend(c.provenance.clone());
            constraints.push(c.clone());
        }
        if k + 1 < hops.len() && hop.witness.rhs != next.witness.lhs {
            points.push(next.witness.lhs.clone());
        }
    }
    if points.len() > 1 && points.first() == points.last() {
        points.pop();
    }
    InconsistentCycle { cycle_type: CycleType::TypeIII, points, link_ids, constraints }
}
