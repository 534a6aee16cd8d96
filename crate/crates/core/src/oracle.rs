//! Brute-force reference implementations and random fixture generators.
//!
//! Nothing here is used by the pipeline itself. These routines are slow on
//! purpose: they answer the same questions as the real algorithms by direct
//! search over assignments, so property tests can compare the two.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consistency::CompoundDAG;
use crate::model::{
    build_graph, AlinkRel, GraphOptions, NodeId, SlinkRel, TemporalEntity, TimeMLGraph, TimeMLLink, TimexClass, TlinkRel,
};
use crate::pa::{PAConstraint, PAGraph, PaRel, TimePoint};
use crate::timeline::NormalFormTimeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_points: usize,
    pub max_enumeration: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_points: 12, max_enumeration: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{size} exceeds the oracle budget of {limit}")]
    TooLarge { size: usize, limit: usize },
}

/// Integer constraint problem over variables with domain `1..=k`.
struct Solver {
    k: i64,
    less: Vec<(usize, usize)>,
    equal: Vec<(usize, usize)>,
}

impl Solver {
    /// Tightens `[lo, hi]` bounds to a fixpoint. Returns false on a wipe-out.
    fn propagate(&self, lo: &mut [i64], hi: &mut [i64]) -> bool {
        loop {
            let mut changed = false;
            for &(a, b) in &self.less {
                if lo[b] < lo[a] + 1 {
                    lo[b] = lo[a] + 1;
                    changed = true;
                }
                if hi[a] > hi[b] - 1 {
                    hi[a] = hi[b] - 1;
                    changed = true;
                }
            }
            for &(a, b) in &self.equal {
                let (l, h) = (lo[a].max(lo[b]), hi[a].min(hi[b]));
                if (lo[a], lo[b], hi[a], hi[b]) != (l, l, h, h) {
                    lo[a] = l;
                    lo[b] = l;
                    hi[a] = h;
                    hi[b] = h;
                    changed = true;
                }
            }
            if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                return false;
            }
            if !changed {
                return true;
            }
        }
    }

    fn satisfied(&self, x: &[i64]) -> bool {
        self.less.iter().all(|&(a, b)| x[a] < x[b]) && self.equal.iter().all(|&(a, b)| x[a] == x[b])
    }

    /// Depth-first search for a full assignment, with `lo`/`hi` as the
    /// starting domains.
    fn search(&self, mut lo: Vec<i64>, mut hi: Vec<i64>) -> Option<Vec<i64>> {
        if !self.propagate(&mut lo, &mut hi) {
            return None;
        }
        let Some(var) = (0..lo.len()).find(|&i| lo[i] < hi[i]) else {
            return self.satisfied(&lo).then_some(lo);
        };
        for v in lo[var]..=hi[var] {
            let (mut l, mut h) = (lo.clone(), hi.clone());
            l[var] = v;
            h[var] = v;
            if let Some(found) = self.search(l, h) {
                return Some(found);
            }
        }
        None
    }

    fn solve(&self, n: usize) -> Option<Vec<i64>> {
        self.search(vec![1; n], vec![self.k; n])
    }

    /// Smallest value `var` takes in any solution.
    fn min_value(&self, n: usize, var: usize) -> Option<i64> {
        (1..=self.k).find(|&v| {
            let (mut lo, mut hi) = (vec![1; n], vec![self.k; n]);
            lo[var] = v;
            hi[var] = v;
            self.search(lo, hi).is_some()
        })
    }
}

/// Whether some assignment of the points to `1..=|points|` satisfies every
/// constraint. Any satisfying real-valued assignment collapses to one in this
/// range, so the search is complete.
pub fn brute_consistent(pa: &PAGraph, budget: OracleBudget) -> Result<bool, OracleError> {
    let index: HashMap<&TimePoint, usize> = pa.points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = pa.points.len();
    if n > budget.max_points {
        return Err(OracleError::TooLarge { size: n, limit: budget.max_points });
    }
    let mut solver = Solver { k: n.max(1) as i64, less: Vec::new(), equal: Vec::new() };
    for c in &pa.constraints {
        let (a, b) = (index[&c.lhs], index[&c.rhs]);
        match c.rel {
            PaRel::Less => solver.less.push((a, b)),
            PaRel::Equal => solver.equal.push((a, b)),
        }
    }
    Ok(solver.solve(n).is_some())
}

/// Pointwise minimum position of every compound over all valid timelines,
/// found by searching each compound's smallest feasible value.
pub fn brute_min_timeline(dag: &CompoundDAG, budget: OracleBudget) -> Result<NormalFormTimeline, OracleError> {
    let n = dag.len();
    if n > budget.max_points {
        return Err(OracleError::TooLarge { size: n, limit: budget.max_points });
    }
    let solver = Solver {
        k: n.max(1) as i64,
        less: dag.edges().iter().map(|e| (e.from, e.to)).collect(),
        equal: Vec::new(),
    };
    let positions = (0..n)
        .map(|c| solver.min_value(n, c).map(|v| v as u32).expect("an acyclic graph always has a timeline"))
        .collect();
    Ok(NormalFormTimeline::from_positions(positions))
}

/// Every weak ordering of the compounds that respects the edges, rendered as
/// normal-form timelines. Each position holds a non-empty block chosen from
/// the compounds whose predecessors are all placed earlier.
pub fn enumerate_timelines(dag: &CompoundDAG, budget: OracleBudget) -> Result<Vec<NormalFormTimeline>, OracleError> {
    let n = dag.len();
    if n > budget.max_points {
        return Err(OracleError::TooLarge { size: n, limit: budget.max_points });
    }
    let mut out = Vec::new();
    let mut positions = vec![0u32; n];
    let mut missing: Vec<usize> = (0..n).map(|c| dag.predecessors(c).len()).collect();
    enumerate_from(dag, budget, 1, &mut positions, &mut missing, &mut out)?;
    Ok(out)
}

fn enumerate_from(
    dag: &CompoundDAG,
    budget: OracleBudget,
    stage: u32,
    positions: &mut Vec<u32>,
    missing: &mut Vec<usize>,
    out: &mut Vec<NormalFormTimeline>,
) -> Result<(), OracleError> {
    let free: Vec<usize> = (0..dag.len()).filter(|&c| positions[c] == 0 && missing[c] == 0).collect();
    if free.is_empty() {
        if positions.iter().all(|&p| p > 0) {
            if out.len() == budget.max_enumeration {
                return Err(OracleError::TooLarge { size: out.len() + 1, limit: budget.max_enumeration });
            }
            out.push(NormalFormTimeline::from_positions(positions.clone()));
        }
        return Ok(());
    }
    for mask in 1u64..(1 << free.len()) {
        let block: Vec<usize> = free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &c)| c).collect();
        for &c in &block {
            positions[c] = stage;
        }
        for &c in &block {
            for &s in dag.successors(c) {
                missing[s] -= 1;
            }
        }
        let res = enumerate_from(dag, budget, stage + 1, positions, missing, out);
        for &c in &block {
            positions[c] = 0;
            for &s in dag.successors(c) {
                missing[s] += 1;
            }
        }
        res?;
    }
    Ok(())
}

/// Number of connected components over TLINK/ALINK edges, by union-find.
pub fn component_count(graph: &TimeMLGraph) -> usize {
    let index: HashMap<&str, usize> = graph.nodes().iter().enumerate().map(|(i, e)| (e.node.id.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = index.len();
    for l in graph.links().iter().filter(|l| l.kind() != crate::model::LinkKind::Slink) {
        let (a, b) = (find(&mut parent, index[l.source.id.as_str()]), find(&mut parent, index[l.target.id.as_str()]));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Adds `x before y` and `y before x` for two random intervals.
    InjectCycle,
}

#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: TimeMLGraph,
    /// Link ids added by the fault injector.
    pub injected: Vec<String>,
}

/// The basic relation of interval `a` with respect to `b`, or `None` for the
/// overlap configurations TimeML cannot express.
fn allen(a: (i64, i64), b: (i64, i64)) -> Option<TlinkRel> {
    use TlinkRel::*;
    let ((as_, ae), (bs, be)) = (a, b);
    Some(if ae < bs {
        Before
    } else if be < as_ {
        After
    } else if ae == bs {
        Ibefore
    } else if be == as_ {
        Iafter
    } else if as_ == bs && ae == be {
        Simultaneous
    } else if as_ == bs {
        if ae < be { Begins } else { BegunBy }
    } else if ae == be {
        if as_ > bs { Ends } else { EndedBy }
    } else if as_ < bs && be < ae {
        Includes
    } else if bs < as_ && ae < be {
        IsIncluded
    } else {
        return None;
    })
}

/// A random document graph whose TLINKs are read off a hidden assignment of
/// intervals, so it is consistent unless a fault is injected. Every fifth node
/// is a DATE timex. `density` is the chance that a pair of nodes gets a link;
/// `slink_prob` is the chance that an event subordinates another event.
pub fn generate_random_graph(seed: u64, n_intervals: usize, density: f64, slink_prob: f64, fault: Fault) -> GeneratedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_intervals.max(1);
    let span = 2 * n as i64 + 2;
    let nodes: Vec<NodeId> = (0..n)
        .map(|i| if i % 5 == 4 { NodeId::timex(format!("t{i}")) } else { NodeId::event(format!("ei{i}")) })
        .collect();
    let entities: Vec<TemporalEntity> = nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            if node.is_timex() {
                TemporalEntity::timex(&node.id, TimexClass::Date, "date", i * 7)
            } else {
                TemporalEntity::event(&node.id, "event", i * 7)
            }
        })
        .collect();
    let truth: Vec<(i64, i64)> = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..span);
            (s, s + rng.gen_range(1..=4))
        })
        .collect();

    let mut links = Vec::new();
    let mut next_id = 0usize;
    let mut fresh = || {
        next_id += 1;
        format!("l{next_id}")
    };
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(density.clamp(0.0, 1.0)) {
                continue;
            }
            let (x, y) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            let Some(rel) = allen(truth[x], truth[y]) else { continue };
            let alink = match rel {
                TlinkRel::Begins => Some(AlinkRel::Initiates),
                TlinkRel::Ends => Some(AlinkRel::Culminates),
                TlinkRel::IsIncluded => Some(AlinkRel::Continues),
                _ => None,
            };
            let both_events = !nodes[x].is_timex() && !nodes[y].is_timex();
            let link = match alink {
                Some(a) if both_events && rng.gen_bool(0.3) => TimeMLLink::alink(&fresh(), nodes[x].clone(), nodes[y].clone(), a),
                _ => TimeMLLink::tlink(&fresh(), nodes[x].clone(), nodes[y].clone(), rel),
            };
            links.push(link);
        }
    }

    let events: Vec<usize> = (0..n).filter(|&i| !nodes[i].is_timex()).collect();
    if events.len() >= 2 {
        for &i in &events {
            if rng.gen_bool(slink_prob.clamp(0.0, 1.0)) {
                let j = **events.iter().filter(|&&j| j != i).collect::<Vec<_>>().choose(&mut rng).expect("two events");
                let rel = *SlinkRel::ALL.choose(&mut rng).expect("non-empty");
                links.push(TimeMLLink::slink(&fresh(), nodes[i].clone(), nodes[j].clone(), rel));
            }
        }
    }

    let mut injected = Vec::new();
    if fault == Fault::InjectCycle && n >= 2 {
        let x = rng.gen_range(0..n);
        let y = (x + rng.gen_range(1..n)) % n;
        let (a, b) = (&nodes[x], &nodes[y]);
        links.retain(|l| l.kind() == crate::model::LinkKind::Slink || !((&l.source == a && &l.target == b) || (&l.source == b && &l.target == a)));
        for (id, s, t) in [("inj1", a, b), ("inj2", b, a)] {
            links.push(TimeMLLink::tlink(id, s.clone(), t.clone(), TlinkRel::Before));
            injected.push(id.to_string());
        }
    }

    let graph = build_graph(entities, links, GraphOptions::default()).expect("generated graphs are well formed");
    GeneratedGraph { graph, injected }
}

/// A random point-algebra graph over `n_points` synthetic points, each pair
/// constrained with probability `density` (three quarters `<`, the rest `=`).
pub fn generate_random_pa(seed: u64, n_points: usize, density: f64) -> PAGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<TimePoint> = (0..n_points).map(|i| TimePoint::start(&NodeId::event(format!("p{i:02}")))).collect();
    let mut constraints = Vec::new();
    for i in 0..n_points {
        for j in i + 1..n_points {
            if !rng.gen_bool(density.clamp(0.0, 1.0)) {
                continue;
            }
            let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            let c = if rng.gen_bool(0.75) {
                PAConstraint::less(points[a].clone(), points[b].clone())
            } else {
                PAConstraint::equal(points[a].clone(), points[b].clone())
            };
            constraints.push(c.with_provenance(&format!("c{}", constraints.len())));
        }
    }
    PAGraph::from_constraints(points, constraints)
}

/// A random DAG on `n` compounds: each pair `i < j` gets an edge with
/// probability `density`, under a random relabelling.
pub fn generate_random_dag(seed: u64, n: usize, density: f64) -> CompoundDAG {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density.clamp(0.0, 1.0)) {
                edges.push((label[i], label[j]));
            }
        }
    }
    CompoundDAG::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{check, CheckOutcome};
    use crate::pa::transform;

    fn interval(id: &str) -> (TimePoint, TimePoint) {
        let n = NodeId::event(id);
        (TimePoint::start(&n), TimePoint::end(&n))
    }

    #[test]
    fn contradictory_pair_is_unsatisfiable() {
        let (a0, a1) = interval("A");
        let (b0, b1) = interval("B");
        let pa = PAGraph::from_constraints(
            [],
            vec![
                PAConstraint::less(a0.clone(), a1.clone()),
                PAConstraint::less(b0.clone(), b1.clone()),
                PAConstraint::less(a1.clone(), b0.clone()),
                PAConstraint::less(b1, a0),
            ],
        );
        assert_eq!(brute_consistent(&pa, OracleBudget::default()), Ok(false));
    }

    #[test]
    fn single_interval_is_satisfiable() {
        let (a0, a1) = interval("A");
        let pa = PAGraph::from_constraints([], vec![PAConstraint::less(a0, a1)]);
        assert_eq!(brute_consistent(&pa, OracleBudget::default()), Ok(true));
    }

    #[test]
    fn budget_is_enforced() {
        let pa = generate_random_pa(1, 13, 0.2);
        assert!(matches!(brute_consistent(&pa, OracleBudget::default()), Err(OracleError::TooLarge { .. })));
        let dag = generate_random_dag(1, 4, 0.0);
        let tiny = OracleBudget { max_points: 12, max_enumeration: 10 };
        assert!(matches!(enumerate_timelines(&dag, tiny), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn weak_orderings_of_small_graphs() {
        assert_eq!(enumerate_timelines(&CompoundDAG::from_edges(2, &[]), OracleBudget::default()).unwrap().len(), 3);
        assert_eq!(enumerate_timelines(&CompoundDAG::from_edges(2, &[(0, 1)]), OracleBudget::default()).unwrap().len(), 1);
        // ordered Bell number of 4
        assert_eq!(enumerate_timelines(&CompoundDAG::from_edges(4, &[]), OracleBudget::default()).unwrap().len(), 75);
    }

    #[test]
    fn chain_minimum() {
        let dag = CompoundDAG::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(brute_min_timeline(&dag, OracleBudget::default()).unwrap().positions(), &[1, 2, 3]);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random_graph(7, 12, 0.4, 0.2, Fault::None);
        let b = generate_random_graph(7, 12, 0.4, 0.2, Fault::None);
        assert_eq!(a.graph.to_canonical_json(), b.graph.to_canonical_json());
        let single = generate_random_graph(1, 1, 0.0, 0.0, Fault::None);
        assert_eq!(single.graph.n(), 1);
        assert!(single.graph.links().is_empty());
    }

    #[test]
    fn generated_graphs_are_consistent_without_faults() {
        for seed in 0..50 {
            let g = generate_random_graph(seed, 10, 0.5, 0.2, Fault::None);
            let p = crate::partition::partition(&g.graph);
            for sub in &p.subgraphs {
                assert!(check(&transform(sub)).is_consistent(), "seed {seed}");
            }
        }
    }

    #[test]
    fn injected_cycle_is_reported() {
        for seed in 0..50 {
            let g = generate_random_graph(seed, 8, 0.4, 0.0, Fault::InjectCycle);
            assert_eq!(g.injected.len(), 2);
            let p = crate::partition::partition(&g.graph);
            let sub = p.subgraph_of(&g.graph.links().iter().find(|l| l.link_id == "inj1").unwrap().source.id).unwrap();
            let CheckOutcome::Inconsistent(report) = check(&transform(&p.subgraphs[sub])) else {
                panic!("seed {seed}: injected cycle went unnoticed");
            };
            assert!(g.injected.iter().any(|id| report.link_ids().contains(id)), "seed {seed}");
        }
    }
}
