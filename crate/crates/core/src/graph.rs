//! The CA-independence graph of a utility function, vertex separation,
//! maximal cliques, and an exhaustive check of the graphoid conditions.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::independence::{test_cai, test_cai_extended, CaiQuery};
use crate::model::{Scope, ToleranceConfig, UtilityTable, VariableSpace};

/// Simple undirected graph whose vertices are the variables of a space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    space: VariableSpace,
    adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    /// Graph without edges.
    pub fn new(space: VariableSpace) -> Self {
        let adjacency = alloc::vec![BTreeSet::new(); space.len()];
        UndirectedGraph { space, adjacency }
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.space.len();
        if a >= n {
            return Err(Error::VariableOutOfRange(a));
        }
        if b >= n {
            return Err(Error::VariableOutOfRange(b));
        }
        if a == b {
            return Err(Error::InvalidArgument("self-loop"));
        }
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(&b))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().copied()
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, n)| n.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Perfect CA-independence map: `a -- b` iff CAI({a}, V - {a, b}, {b}) fails.
pub fn build_perfect_map(u: &UtilityTable, tol: &ToleranceConfig) -> UndirectedGraph {
    let space = u.space();
    let all = space.full_scope();
    let mut graph = UndirectedGraph::new(space.clone());
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            let x = Scope::singleton(a);
            let y = Scope::singleton(b);
            let z = all.difference(&x.union(&y));
            let q = CaiQuery { x, z, y };
            let holds = test_cai(u, &q, tol).expect("pairwise query partitions the space");
            if !holds {
                graph.adjacency[a].insert(b);
                graph.adjacency[b].insert(a);
            }
        }
    }
    graph
}

/// True iff every path from `x` to `y` passes through `z`.
pub fn separates(g: &UndirectedGraph, x: &Scope, z: &Scope, y: &Scope) -> Result<bool> {
    for s in [x, z, y] {
        g.space.check_scope(s)?;
    }
    if !x.is_disjoint(z) || !x.is_disjoint(y) || !z.is_disjoint(y) {
        return Err(Error::Overlap);
    }
    let mut seen = alloc::vec![false; g.space.len()];
    let mut queue: VecDeque<usize> = x.iter().collect();
    for v in x.iter() {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for w in g.neighbors(v) {
            if seen[w] || z.contains(w) {
                continue;
            }
            if y.contains(w) {
                return Ok(false);
            }
            seen[w] = true;
            queue.push_back(w);
        }
    }
    Ok(true)
}

/// All maximal cliques, sorted; isolated vertices come out as singletons.
pub fn maximal_cliques(g: &UndirectedGraph) -> Vec<Scope> {
    let mut out = Vec::new();
    if g.space.is_empty() {
        return out;
    }
    let candidates: BTreeSet<usize> = (0..g.space.len()).collect();
    bron_kerbosch(g, &mut Vec::new(), candidates, BTreeSet::new(), &mut out);
    out.sort();
    out
}

fn bron_kerbosch(
    g: &UndirectedGraph,
    clique: &mut Vec<usize>,
    mut candidates: BTreeSet<usize>,
    mut excluded: BTreeSet<usize>,
    out: &mut Vec<Scope>,
) {
    if candidates.is_empty() {
        if excluded.is_empty() {
            out.push(Scope::new(clique.iter().copied()));
        }
        return;
    }
    // pivot with the most candidate neighbours; lowest index on ties
    let pivot = candidates
        .iter()
        .chain(excluded.iter())
        .copied()
        .max_by_key(|&p| {
            let n = candidates.iter().filter(|&&c| g.has_edge(p, c)).count();
            (n, core::cmp::Reverse(p))
        })
        .expect("candidates nonempty");
    let branch: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&v| !g.has_edge(pivot, v))
        .collect();
    for v in branch {
        let next_candidates = candidates
            .iter()
            .copied()
            .filter(|&c| g.has_edge(v, c))
            .collect();
        let next_excluded = excluded
            .iter()
            .copied()
            .filter(|&c| g.has_edge(v, c))
            .collect();
        clique.push(v);
        bron_kerbosch(g, clique, next_candidates, next_excluded, out);
        clique.pop();
        candidates.remove(&v);
        excluded.insert(v);
    }
}

/// Largest variable count accepted by [`check_graphoid_axioms`].
pub const MAX_GRAPHOID_VARIABLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphoidCondition {
    Symmetry,
    Decomposition,
    Intersection,
    StrongUnion,
    Transitivity,
}

impl GraphoidCondition {
    pub const ALL: [GraphoidCondition; 5] = [
        GraphoidCondition::Symmetry,
        GraphoidCondition::Decomposition,
        GraphoidCondition::Intersection,
        GraphoidCondition::StrongUnion,
        GraphoidCondition::Transitivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphoidCondition::Symmetry => "symmetry",
            GraphoidCondition::Decomposition => "decomposition",
            GraphoidCondition::Intersection => "intersection",
            GraphoidCondition::StrongUnion => "strong_union",
            GraphoidCondition::Transitivity => "transitivity",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConditionTally {
    pub checked: u64,
    pub violated: u64,
}

/// One instance whose antecedent holds and consequent fails.
///
/// `w` is the fourth set for decomposition, intersection and strong union and
/// the single extra variable for transitivity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphoidViolation {
    pub condition: GraphoidCondition,
    pub x: Scope,
    pub z: Scope,
    pub y: Scope,
    pub w: Scope,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphoidReport {
    pub symmetry: ConditionTally,
    pub decomposition: ConditionTally,
    pub intersection: ConditionTally,
    pub strong_union: ConditionTally,
    pub transitivity: ConditionTally,
    pub violations: Vec<GraphoidViolation>,
}

impl GraphoidReport {
    pub fn tally(&self, c: GraphoidCondition) -> &ConditionTally {
        match c {
            GraphoidCondition::Symmetry => &self.symmetry,
            GraphoidCondition::Decomposition => &self.decomposition,
            GraphoidCondition::Intersection => &self.intersection,
            GraphoidCondition::StrongUnion => &self.strong_union,
            GraphoidCondition::Transitivity => &self.transitivity,
        }
    }

    fn tally_mut(&mut self, c: GraphoidCondition) -> &mut ConditionTally {
        match c {
            GraphoidCondition::Symmetry => &mut self.symmetry,
            GraphoidCondition::Decomposition => &mut self.decomposition,
            GraphoidCondition::Intersection => &mut self.intersection,
            GraphoidCondition::StrongUnion => &mut self.strong_union,
            GraphoidCondition::Transitivity => &mut self.transitivity,
        }
    }

    pub fn total_violations(&self) -> u64 {
        GraphoidCondition::ALL
            .iter()
            .map(|&c| self.tally(c).violated)
            .sum()
    }

    fn record(&mut self, condition: GraphoidCondition, ok: bool, sets: [u32; 4]) {
        let tally = self.tally_mut(condition);
        tally.checked += 1;
        if !ok {
            tally.violated += 1;
            let [x, z, y, w] = sets.map(scope_of);
            self.violations.push(GraphoidViolation {
                condition,
                x,
                z,
                y,
                w,
            });
        }
    }
}

fn scope_of(mask: u32) -> Scope {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Extended CAI for every disjoint triple, keyed by variable bitmasks.
struct CaiTable(BTreeMap<(u32, u32, u32), bool>);

impl CaiTable {
    fn get(&self, x: u32, z: u32, y: u32) -> bool {
        self.0[&(x, z, y)]
    }
}

/// Calls `f` with every tuple of `k` pairwise disjoint subsets of `n` variables.
fn for_each_disjoint<F: FnMut(&[u32])>(n: usize, k: usize, mut f: F) {
    let labels = k + 1;
    let mut digits = alloc::vec![0usize; n];
    let mut sets = alloc::vec![0u32; k];
    loop {
        sets.iter_mut().for_each(|s| *s = 0);
        for (v, &d) in digits.iter().enumerate() {
            if d > 0 {
                sets[d - 1] |= 1 << v;
            }
        }
        f(&sets);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            digits[i] += 1;
            if digits[i] < labels {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Checks symmetry, decomposition, intersection, strong union and (weak)
/// transitivity of extended CAI over every disjoint argument tuple.
///
/// Conditions, with `I` the extended CAI relation:
/// - symmetry: `I(X,Z,Y) => I(Y,Z,X)`
/// - decomposition: `I(X,Z,Y+W) => I(X,Z,Y) and I(X,Z,W)`
/// - intersection: `I(X,Z+W,Y) and I(X,Z+Y,W) => I(X,Z,Y+W)`
/// - strong union: `I(X,Z,Y) => I(Y,Z+W,X)`
/// - transitivity: `I(X,Z,Y) => I(X,Z,w) or I(w,Z,Y)` for every single `w` outside `X+Y+Z`
pub fn check_graphoid_axioms(u: &UtilityTable, tol: &ToleranceConfig) -> Result<GraphoidReport> {
    let n = u.space().len();
    if n > MAX_GRAPHOID_VARIABLES {
        return Err(Error::GuardExceeded {
            what: "graphoid check variables",
            size: n as u64,
            limit: MAX_GRAPHOID_VARIABLES as u64,
        });
    }
    let mut table = BTreeMap::new();
    let mut failure = None;
    for_each_disjoint(n, 3, |sets| {
        if failure.is_some() {
            return;
        }
        let [x, z, y] = [sets[0], sets[1], sets[2]].map(scope_of);
        match test_cai_extended(u, &x, &z, &y, tol) {
            Ok(holds) => {
                table.insert((sets[0], sets[1], sets[2]), holds);
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let cai = CaiTable(table);
    let mut report = GraphoidReport::default();
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };

    for_each_disjoint(n, 3, |sets| {
        let (x, z, y) = (sets[0], sets[1], sets[2]);
        if cai.get(x, z, y) {
            report.record(GraphoidCondition::Symmetry, cai.get(y, z, x), [x, z, y, 0]);
            let rest = all & !(x | y | z);
            for w in (0..n as u32).map(|i| 1u32 << i).filter(|b| rest & b != 0) {
                let ok = cai.get(x, z, w) || cai.get(w, z, y);
                report.record(GraphoidCondition::Transitivity, ok, [x, z, y, w]);
            }
        } else {
            report.symmetry.checked += 1;
            let rest = all & !(x | y | z);
            report.transitivity.checked += u64::from(rest.count_ones());
        }
    });

    for_each_disjoint(n, 4, |sets| {
        let (x, z, y, w) = (sets[0], sets[1], sets[2], sets[3]);
        if cai.get(x, z, y | w) {
            let ok = cai.get(x, z, y) && cai.get(x, z, w);
            report.record(GraphoidCondition::Decomposition, ok, [x, z, y, w]);
        } else {
            report.decomposition.checked += 1;
        }
        if cai.get(x, z | w, y) && cai.get(x, z | y, w) {
            let ok = cai.get(x, z, y | w);
            report.record(GraphoidCondition::Intersection, ok, [x, z, y, w]);
        } else {
            report.intersection.checked += 1;
        }
        if cai.get(x, z, y) {
            let ok = cai.get(y, z | w, x);
            report.record(GraphoidCondition::StrongUnion, ok, [x, z, y, w]);
        } else {
            report.strong_union.checked += 1;
        }
    });
    Ok(report)
}
