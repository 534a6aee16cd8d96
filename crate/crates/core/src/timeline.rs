//! Minimum normal-form timelines and ordering indeterminacy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::CompoundDAG;
use crate::pa::TimePoint;

/// Positions (1-based) of every compound point of a DAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormTimeline {
    positions: Vec<u32>,
    length: u32,
}

impl NormalFormTimeline {
    /// Wraps raw positions, one per compound. Positions must be ≥ 1.
    pub fn from_positions(positions: Vec<u32>) -> Self {
        let length = positions.iter().copied().max().unwrap_or(0);
        NormalFormTimeline { positions, length }
    }

    pub fn position(&self, compound: usize) -> u32 {
        self.positions[compound]
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn point_position(&self, dag: &CompoundDAG, p: &TimePoint) -> Option<u32> {
        dag.compound_of(p).map(|c| self.positions[c])
    }

    /// Compounds grouped by position; index 0 holds position 1.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![Vec::new(); self.length as usize];
        for (c, &p) in self.positions.iter().enumerate() {
            levels[p as usize - 1].push(c);
        }
        levels
    }

    /// True when every edge of `dag` goes strictly forward in time.
    pub fn satisfies(&self, dag: &CompoundDAG) -> bool {
        dag.edges().iter().all(|e| self.positions[e.from] < self.positions[e.to])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("constraint graph has a cycle: {remaining} compound point(s) never became free")]
    CycleDetected { remaining: usize },
}

/// Kahn's topological sort, scheduling at each stage every compound whose
/// in-degree has dropped to zero. Stage `t` assigns position `t`, which gives
/// each point the smallest position any normal-form timeline can give it.
pub fn greedy_kahn(dag: &CompoundDAG) -> Result<NormalFormTimeline, TimelineError> {
    let n = dag.len();
    let mut indegree = vec![0usize; n];
    for e in dag.edges() {
        indegree[e.to] += 1;
    }
    let mut positions = vec![0u32; n];
    let mut free: Vec<usize> = (0..n).filter(|&c| indegree[c] == 0).collect();
    let mut stage = 0u32;
    let mut placed = 0usize;
    while !free.is_empty() {
        stage += 1;
        let mut next = Vec::new();
        for &u in &free {
            positions[u] = stage;
            placed += 1;
            for &v in dag.successors(u) {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        free = next;
    }
    if placed < n {
        return Err(TimelineError::CycleDetected { remaining: n - placed });
    }
    Ok(NormalFormTimeline { positions, length: stage })
}

/// Answers "is there a directed path from `u` to `v`?" on a compound DAG.
pub trait Reachability {
    fn reaches(&self, u: usize, v: usize) -> bool;

    fn comparable(&self, u: usize, v: usize) -> bool {
        self.reaches(u, v) || self.reaches(v, u)
    }
}

/// Per-query DFS from `u`, stopping as soon as `v` is discovered.
pub struct DfsReach<'a> {
    dag: &'a CompoundDAG,
}

impl<'a> DfsReach<'a> {
    pub fn new(dag: &'a CompoundDAG) -> Self {
        DfsReach { dag }
    }
}

impl Reachability for DfsReach<'_> {
    fn reaches(&self, u: usize, v: usize) -> bool {
        if u == v {
            return true;
        }
        let mut seen = vec![false; self.dag.len()];
        let mut stack = vec![u];
        seen[u] = true;
        while let Some(w) = stack.pop() {
            for &x in self.dag.successors(w) {
                if x == v {
                    return true;
                }
                if !seen[x] {
                    seen[x] = true;
                    stack.push(x);
                }
            }
        }
        false
    }
}

/// Precomputed transitive closure as one bit row per compound, for dense
/// querying.
pub struct ClosureReach {
    words: usize,
    rows: Vec<u64>,
}

impl ClosureReach {
    /// `timeline` supplies a topological order (any normal-form timeline does).
    pub fn new(dag: &CompoundDAG, timeline: &NormalFormTimeline) -> Self {
        let n = dag.len();
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&c| std::cmp::Reverse(timeline.position(c)));
        for u in order {
            rows[u * words + u / 64] |= 1 << (u % 64);
            for &v in dag.successors(u) {
                for w in 0..words {
                    let bits = rows[v * words + w];
                    rows[u * words + w] |= bits;
                }
            }
        }
        ClosureReach { words, rows }
    }
}

impl Reachability for ClosureReach {
    fn reaches(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] & (1 << (v % 64)) != 0
    }
}

/// True iff neither compound reaches the other, i.e. some consistent
/// timeline orders them differently from the minimum one.
pub fn is_indeterminate(dag: &CompoundDAG, u: usize, v: usize) -> bool {
    u != v && !DfsReach::new(dag).comparable(u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReachabilityMode {
    #[default]
    Dfs,
    Closure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TableOptions {
    /// Compute the full set of unordered compound pairs (quadratic queries).
    pub full_pairs: bool,
    pub mode: ReachabilityMode,
}

/// A maximal run of positions `start..=end` containing indeterminate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub start: u32,
    pub end: u32,
    /// Unordered compound pairs with both positions inside the section.
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndeterminacyTable {
    /// All mutually unreachable compound pairs `(a, b)` with `a < b`; only
    /// filled when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unordered_pairs: Option<Vec<(usize, usize)>>,
    pub sections: Vec<Section>,
    /// Unordered compound pairs lying inside some section.
    pub section_pairs: usize,
}

/// Version tag of the section rule implemented by [`indeterminacy_table`].
pub const SECTION_RULE: &str = "adjacent-v1";

/// Builds the indeterminacy table for `dag` and its minimum timeline.
///
/// Position `p` is marked when it holds two or more compounds (co-located
/// compounds are never ordered), or when some compound at `p` is unordered
/// with some compound at `p + 1`, in which case `p + 1` is marked too.
/// Sections are the maximal runs of consecutive marked positions.
pub fn indeterminacy_table(dag: &CompoundDAG, timeline: &NormalFormTimeline, options: TableOptions) -> IndeterminacyTable {
    match options.mode {
        ReachabilityMode::Dfs => table_with(dag, timeline, options, &DfsReach::new(dag)),
        ReachabilityMode::Closure => table_with(dag, timeline, options, &ClosureReach::new(dag, timeline)),
    }
}

fn table_with(
    dag: &CompoundDAG,
    timeline: &NormalFormTimeline,
    options: TableOptions,
    reach: &dyn Reachability,
) -> IndeterminacyTable {
    let levels = timeline.levels();
    let mut marked = vec![false; levels.len()];
    for (p, level) in levels.iter().enumerate() {
        if level.len() >= 2 {
            marked[p] = true;
        }
        if let Some(next) = levels.get(p + 1) {
            // anything at p + 1 cannot reach p, so one direction suffices
            if level.iter().any(|&a| next.iter().any(|&b| !reach.reaches(a, b))) {
                marked[p] = true;
                marked[p + 1] = true;
            }
        }
    }

    let mut sections = Vec::new();
    let mut p = 0;
    while p < marked.len() {
        if marked[p] {
            let start = p;
            while p + 1 < marked.len() && marked[p + 1] {
                p += 1;
            }
            sections.push(Section { start: start as u32 + 1, end: p as u32 + 1, pairs: 0 });
        }
        p += 1;
    }

    for s in &mut sections {
        let members: Vec<usize> = (s.start..=s.end).flat_map(|pos| levels[pos as usize - 1].iter().copied()).collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if !reach.comparable(a, b) {
                    s.pairs += 1;
                }
            }
        }
    }
    let section_pairs = sections.iter().map(|s| s.pairs).sum();

    let unordered_pairs = options.full_pairs.then(|| {
        let n = dag.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if !reach.comparable(a, b) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    });

    IndeterminacyTable { unordered_pairs, sections, section_pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interval() {
        let dag = CompoundDAG::from_edges(2, &[(0, 1)]);
        let t = greedy_kahn(&dag).unwrap();
        assert_eq!(t.positions(), &[1, 2]);
        assert_eq!(t.length(), 2);
    }

    #[test]
    fn a_before_b() {
        // A⁻ A⁺ B⁻ B⁺
        let dag = CompoundDAG::from_edges(4, &[(0, 1), (2, 3), (1, 2)]);
        let t = greedy_kahn(&dag).unwrap();
        assert_eq!(t.positions(), &[1, 2, 3, 4]);
        assert!(!is_indeterminate(&dag, 1, 2));
        let table = indeterminacy_table(&dag, &t, TableOptions { full_pairs: true, ..Default::default() });
        assert!(table.sections.is_empty());
        assert_eq!(table.unordered_pairs, Some(vec![]));
    }

    #[test]
    fn cycle_is_rejected() {
        let dag = CompoundDAG::from_edges(3, &[(0, 1), (1, 2), (2, 1)]);
        assert_eq!(greedy_kahn(&dag), Err(TimelineError::CycleDetected { remaining: 2 }));
    }

    #[test]
    fn co_located_compounds_are_all_pairwise_unordered() {
        // root → {1, 2, 3} → sink
        let dag = CompoundDAG::from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]);
        let t = greedy_kahn(&dag).unwrap();
        assert_eq!(t.positions(), &[1, 2, 2, 2, 3]);
        let table = indeterminacy_table(&dag, &t, TableOptions { full_pairs: true, ..Default::default() });
        assert_eq!(table.unordered_pairs.as_ref().unwrap().len(), 3);
        assert_eq!(table.sections, vec![Section { start: 2, end: 2, pairs: 3 }]);
        assert_eq!(table.section_pairs, 3);
    }

    #[test]
    fn adjacent_positions_can_open_a_section() {
        // 0 → 1 → 2 and 0 → 3 → 4 → 5 → 2: compound 1 (pos 2) is unordered with 4 (pos 3)
        let dag = CompoundDAG::from_edges(6, &[(0, 1), (1, 2), (0, 3), (3, 4), (4, 5), (5, 2)]);
        let t = greedy_kahn(&dag).unwrap();
        assert_eq!(t.positions(), &[1, 2, 5, 2, 3, 4]);
        let table = indeterminacy_table(&dag, &t, TableOptions::default());
        assert_eq!(table.sections, vec![Section { start: 2, end: 3, pairs: 2 }]);
    }

    #[test]
    fn closure_and_dfs_agree() {
        let dag = CompoundDAG::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (4, 5), (5, 2), (6, 5)]);
        let t = greedy_kahn(&dag).unwrap();
        let closure = ClosureReach::new(&dag, &t);
        let dfs = DfsReach::new(&dag);
        for u in 0..7 {
            for v in 0..7 {
                assert_eq!(closure.reaches(u, v), dfs.reaches(u, v), "{u} -> {v}");
            }
        }
        let a = indeterminacy_table(&dag, &t, TableOptions { full_pairs: true, mode: ReachabilityMode::Dfs });
        let b = indeterminacy_table(&dag, &t, TableOptions { full_pairs: true, mode: ReachabilityMode::Closure });
        assert_eq!(a, b);
    }
}
