//! Bayesian networks, exact marginals by variable elimination, and expected
//! utility computed either by enumeration or factor by factor.
//!
//! For `u = sum_i f_i(Z_i)`, linearity of expectation gives
//! `E[u | e] = sum_i sum_{z} P(Z_i = z | e) f_i(z)`, so only the clique
//! marginals of the distribution are ever needed.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{
    advance, advance_over, AdditiveDecomposition, Assignment, Layout, Scope, UtilityFunction,
    VariableSpace, DENSE_STATE_LIMIT,
};

/// Tolerance on probability sums.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A joint distribution that can be evaluated at full states.
pub trait Distribution {
    fn space(&self) -> &VariableSpace;

    fn probability_of_state(&self, state: &[usize]) -> f64;
}

/// Conditional probability table `P(child | parents)`.
///
/// `table` is row-major over the parents (in space order) followed by the child.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: usize,
    pub parents: Scope,
    pub table: Vec<f64>,
}

impl Cpt {
    pub fn new(child: usize, parents: Scope, table: Vec<f64>) -> Self {
        Cpt {
            child,
            parents,
            table,
        }
    }

    pub fn family(&self) -> Scope {
        self.parents.union(&Scope::singleton(self.child))
    }
}

#[derive(Clone, Debug)]
pub struct BayesNet {
    space: VariableSpace,
    cpts: Vec<Cpt>,
    parent_layouts: Vec<Layout>,
}

impl PartialEq for BayesNet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.cpts == other.cpts
    }
}

impl BayesNet {
    /// One CPT per variable, in any order.
    pub fn new(space: VariableSpace, cpts: Vec<Cpt>) -> Result<Self> {
        let n = space.len();
        let mut slots: Vec<Option<Cpt>> = alloc::vec![None; n];
        for cpt in cpts {
            if cpt.child >= n {
                return Err(Error::VariableOutOfRange(cpt.child));
            }
            space.check_scope(&cpt.parents)?;
            if cpt.parents.contains(cpt.child) {
                return Err(Error::Cyclic);
            }
            let child = cpt.child;
            if slots[child].replace(cpt).is_some() {
                return Err(Error::MissingCpt(child));
            }
        }
        let mut cpts = Vec::with_capacity(n);
        let mut parent_layouts = Vec::with_capacity(n);
        for (v, slot) in slots.into_iter().enumerate() {
            let cpt = slot.ok_or(Error::MissingCpt(v))?;
            let layout = Layout::new(&space, &cpt.parents);
            let card = space.cardinality(v);
            let expected = layout.size() * card;
            if cpt.table.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    found: cpt.table.len(),
                });
            }
            if cpt.table.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidProbability);
            }
            for row in cpt.table.chunks(card) {
                if (row.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(Error::NotNormalized);
                }
            }
            cpts.push(cpt);
            parent_layouts.push(layout);
        }
        let net = BayesNet {
            space,
            cpts,
            parent_layouts,
        };
        net.topological_order()?;
        Ok(net)
    }

    /// Mutually independent variables with uniform marginals.
    pub fn uniform(space: VariableSpace) -> Self {
        let cpts = (0..space.len())
            .map(|v| {
                let card = space.cardinality(v);
                Cpt::new(v, Scope::empty(), alloc::vec![1.0 / card as f64; card])
            })
            .collect();
        Self::new(space, cpts).expect("uniform network is valid")
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Parents-first ordering of the variables.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.space.len();
        let mut pending: Vec<usize> = self.cpts.iter().map(|c| c.parents.len()).collect();
        let mut children: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for cpt in &self.cpts {
            for p in cpt.parents.iter() {
                children[p].push(cpt.child);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Cyclic);
        }
        Ok(order)
    }

    /// `P(child = state[child] | parents = state[parents])`.
    pub fn conditional(&self, child: usize, state: &[usize]) -> f64 {
        let card = self.space.cardinality(child);
        self.cpts[child].table[self.parent_layouts[child].index(state) * card + state[child]]
    }

    /// The variables in `seed` together with all their ancestors.
    fn ancestral_closure(&self, seed: &Scope) -> Scope {
        let mut keep = alloc::vec![false; self.space.len()];
        let mut stack: Vec<usize> = seed.iter().collect();
        while let Some(v) = stack.pop() {
            if !keep[v] {
                keep[v] = true;
                stack.extend(self.cpts[v].parents.iter());
            }
        }
        (0..keep.len()).filter(|&v| keep[v]).collect()
    }

    /// Family potential of `child`, laid out over its family in space order.
    fn family_potential(&self, child: usize) -> Potential {
        let scope = self.cpts[child].family();
        let layout = Layout::new(&self.space, &scope);
        let mut state = alloc::vec![0; self.space.len()];
        let mut local = alloc::vec![0; scope.len()];
        let mut values = Vec::with_capacity(layout.size());
        loop {
            for (&v, &d) in scope.indices().iter().zip(&local) {
                state[v] = d;
            }
            values.push(self.conditional(child, &state));
            if !advance(&mut local, layout.cards()) {
                break;
            }
        }
        Potential { scope, values }
    }
}

impl Distribution for BayesNet {
    fn space(&self) -> &VariableSpace {
        &self.space
    }

    fn probability_of_state(&self, state: &[usize]) -> f64 {
        (0..self.space.len())
            .map(|v| self.conditional(v, state))
            .product()
    }
}

/// Probability of a full assignment under `bn`.
pub fn joint_probability(bn: &BayesNet, a: &Assignment) -> Result<f64> {
    let state = a.to_state(&bn.space)?;
    Ok(bn.probability_of_state(&state))
}

/// Nonnegative table over a scope, used during elimination.
#[derive(Clone, Debug)]
struct Potential {
    scope: Scope,
    values: Vec<f64>,
}

impl Potential {
    /// For each position of `target`, the stride of that variable in `self` (0 if absent).
    fn strides_within(&self, space: &VariableSpace, target: &Scope) -> Vec<usize> {
        let layout = Layout::new(space, &self.scope);
        target
            .iter()
            .map(|v| self.scope.position(v).map_or(0, |p| layout.strides()[p]))
            .collect()
    }

    fn product(&self, other: &Potential, space: &VariableSpace) -> Potential {
        let scope = self.scope.union(&other.scope);
        let layout = Layout::new(space, &scope);
        let sa = self.strides_within(space, &scope);
        let sb = other.strides_within(space, &scope);
        let mut local = alloc::vec![0; scope.len()];
        let mut values = Vec::with_capacity(layout.size());
        loop {
            let ia: usize = local.iter().zip(&sa).map(|(d, s)| d * s).sum();
            let ib: usize = local.iter().zip(&sb).map(|(d, s)| d * s).sum();
            values.push(self.values[ia] * other.values[ib]);
            if !advance(&mut local, layout.cards()) {
                break;
            }
        }
        Potential { scope, values }
    }

    fn sum_out(&self, var: usize, space: &VariableSpace) -> Potential {
        let scope = self.scope.difference(&Scope::singleton(var));
        let layout = Layout::new(space, &scope);
        let target_strides: Vec<usize> = self
            .scope
            .iter()
            .map(|v| scope.position(v).map_or(0, |p| layout.strides()[p]))
            .collect();
        let own = Layout::new(space, &self.scope);
        let mut values = alloc::vec![0.0; layout.size()];
        let mut local = alloc::vec![0; self.scope.len()];
        for &p in &self.values {
            let i: usize = local.iter().zip(&target_strides).map(|(d, s)| d * s).sum();
            values[i] += p;
            advance(&mut local, own.cards());
        }
        Potential { scope, values }
    }

    /// Fixes the evidence variables and drops them from the scope.
    fn restrict(&self, evidence: &Assignment, space: &VariableSpace) -> Potential {
        if self.scope.iter().all(|v| evidence.get(v).is_none()) {
            return self.clone();
        }
        let scope: Scope = self
            .scope
            .iter()
            .filter(|&v| evidence.get(v).is_none())
            .collect();
        let layout = Layout::new(space, &scope);
        let own = Layout::new(space, &self.scope);
        let fixed: usize = self
            .scope
            .iter()
            .enumerate()
            .filter_map(|(p, v)| evidence.get(v).map(|x| x * own.strides()[p]))
            .sum();
        let free_strides: Vec<usize> = scope
            .iter()
            .map(|v| own.strides()[self.scope.position(v).expect("subset")])
            .collect();
        let mut local = alloc::vec![0; scope.len()];
        let mut values = Vec::with_capacity(layout.size());
        loop {
            let i: usize = local.iter().zip(&free_strides).map(|(d, s)| d * s).sum();
            values.push(self.values[fixed + i]);
            if !advance(&mut local, layout.cards()) {
                break;
            }
        }
        Potential { scope, values }
    }
}

/// Next variable to eliminate: fewest fill-in edges, lowest index on ties.
fn min_fill_choice(pending: &BTreeSet<usize>, potentials: &[Potential]) -> usize {
    let mut best = (usize::MAX, usize::MAX);
    for &v in pending {
        let mut neighbours = BTreeSet::new();
        for p in potentials.iter().filter(|p| p.scope.contains(v)) {
            neighbours.extend(p.scope.iter().filter(|&w| w != v));
        }
        let neighbours: Vec<usize> = neighbours.into_iter().collect();
        let mut fill = 0;
        for (i, &a) in neighbours.iter().enumerate() {
            for &b in &neighbours[i + 1..] {
                let linked = potentials
                    .iter()
                    .any(|p| p.scope.contains(a) && p.scope.contains(b));
                if !linked {
                    fill += 1;
                }
            }
        }
        if (fill, v) < best {
            best = (fill, v);
        }
    }
    best.1
}

/// `P(target | evidence)` as a table over `target`, by variable elimination
/// with a min-fill order.
pub fn marginal(bn: &BayesNet, target: &Scope, evidence: &Assignment) -> Result<Vec<f64>> {
    let space = &bn.space;
    space.check_scope(target)?;
    evidence.validate(space)?;
    let observed = evidence.scope();
    if !target.is_disjoint(&observed) {
        return Err(Error::Overlap);
    }
    let relevant = bn.ancestral_closure(&target.union(&observed));
    let mut potentials: Vec<Potential> = relevant
        .iter()
        .map(|v| bn.family_potential(v).restrict(evidence, space))
        .collect();
    let mut pending: BTreeSet<usize> = relevant
        .difference(&target.union(&observed))
        .iter()
        .collect();
    while !pending.is_empty() {
        let v = min_fill_choice(&pending, &potentials);
        pending.remove(&v);
        let (touching, rest): (Vec<Potential>, Vec<Potential>) =
            potentials.into_iter().partition(|p| p.scope.contains(v));
        potentials = rest;
        if let Some(joined) = touching.into_iter().reduce(|acc, p| acc.product(&p, space)) {
            potentials.push(joined.sum_out(v, space));
        }
    }
    let joint = potentials.into_iter().fold(
        Potential {
            scope: Scope::empty(),
            values: alloc::vec![1.0],
        },
        |acc, p| acc.product(&p, space),
    );
    debug_assert_eq!(&joint.scope, target);
    let total: f64 = joint.values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(joint.values.into_iter().map(|p| p / total).collect())
}

/// Explicit joint distribution over every state.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitDistribution {
    space: VariableSpace,
    probs: Vec<f64>,
}

impl ExplicitDistribution {
    pub fn new(space: VariableSpace, probs: Vec<f64>) -> Result<Self> {
        let size = space.check_dense(false)?;
        if probs.len() != size {
            return Err(Error::LengthMismatch {
                expected: size,
                found: probs.len(),
            });
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidProbability);
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized);
        }
        Ok(ExplicitDistribution { space, probs })
    }

    pub fn uniform(space: VariableSpace) -> Result<Self> {
        let size = space.check_dense(false)?;
        Self::new(space, alloc::vec![1.0 / size as f64; size])
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal table over `scope`, row-major.
    pub fn marginal(&self, scope: &Scope) -> Result<Vec<f64>> {
        self.space.check_scope(scope)?;
        let layout = Layout::new(&self.space, scope);
        let cards = self.space.cardinalities();
        let mut state = alloc::vec![0; self.space.len()];
        let mut out = alloc::vec![0.0; layout.size()];
        for &p in &self.probs {
            out[layout.index(&state)] += p;
            advance(&mut state, &cards);
        }
        Ok(out)
    }
}

impl Distribution for ExplicitDistribution {
    fn space(&self) -> &VariableSpace {
        &self.space
    }

    fn probability_of_state(&self, state: &[usize]) -> f64 {
        self.probs[Layout::full(&self.space).index(state)]
    }
}

/// `E[u | evidence]` by enumerating every consistent state.
///
/// Refused above [`DENSE_STATE_LIMIT`] states unless `force` is set.
pub fn eu_brute<U, P>(u: &U, p: &P, evidence: &Assignment, force: bool) -> Result<f64>
where
    U: UtilityFunction + ?Sized,
    P: Distribution + ?Sized,
{
    let space = u.space();
    if p.space() != space {
        return Err(Error::SpaceMismatch);
    }
    evidence.validate(space)?;
    let size = space.state_count();
    if !force && size > DENSE_STATE_LIMIT {
        return Err(Error::GuardExceeded {
            what: "brute-force enumeration",
            size,
            limit: DENSE_STATE_LIMIT,
        });
    }
    let free: Vec<usize> = (0..space.len())
        .filter(|&v| evidence.get(v).is_none())
        .collect();
    let mut state = evidence.or_first(space)?;
    let (mut weighted, mut mass) = (0.0, 0.0);
    loop {
        let prob = p.probability_of_state(&state);
        if prob > 0.0 {
            weighted += prob * u.value_of_state(&state);
            mass += prob;
        }
        if !advance_over(&mut state, &free, space) {
            break;
        }
    }
    if !(mass > 0.0) {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(weighted / mass)
}

/// `E[u | evidence]` as the sum of the factor expectations, each taken
/// against the marginal of the factor's scope.
pub fn eu_factored(d: &AdditiveDecomposition, bn: &BayesNet, evidence: &Assignment) -> Result<f64> {
    let space = d.space();
    if bn.space() != space {
        return Err(Error::SpaceMismatch);
    }
    evidence.validate(space)?;
    let observed = evidence.scope();
    if d.factors().is_empty() {
        marginal(bn, &Scope::empty(), evidence)?;
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, factor) in d.factors().iter().enumerate() {
        let target = factor.scope.difference(&observed);
        let probs = marginal(bn, &target, evidence)?;
        let layout = Layout::new(space, &target);
        let mut state = evidence.or_first(space)?;
        let mut local = alloc::vec![0; target.len()];
        let mut expectation = 0.0;
        for &p in &probs {
            for (&v, &x) in target.indices().iter().zip(&local) {
                state[v] = x;
            }
            expectation += p * d.factor_value(i, &state);
            advance(&mut local, layout.cards());
        }
        total += expectation;
    }
    Ok(total)
}

/// Whether a utility factor scope lies inside some node family of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentEntry {
    pub scope: Scope,
    /// Child variable of the first family containing the scope.
    pub family_of: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentReport {
    pub entries: Vec<ContainmentEntry>,
    pub uncovered: usize,
}

/// For each factor scope of `d`, the first family (child plus parents) of
/// `bn` that contains it.
pub fn containment_report(d: &AdditiveDecomposition, bn: &BayesNet) -> Result<ContainmentReport> {
    if d.space() != bn.space() {
        return Err(Error::SpaceMismatch);
    }
    let families: Vec<Scope> = bn.cpts().iter().map(Cpt::family).collect();
    let entries: Vec<ContainmentEntry> = d
        .scopes()
        .map(|scope| ContainmentEntry {
            scope: scope.clone(),
            family_of: families.iter().position(|f| scope.is_subset(f)),
        })
        .collect();
    let uncovered = entries.iter().filter(|e| e.family_of.is_none()).count();
    Ok(ContainmentReport { entries, uncovered })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub label: String,
    pub evidence: Assignment,
}

/// Labelled actions, each modelled as the evidence it conditions on.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSet {
    actions: Vec<Action>,
}

impl ActionSet {
    pub fn new(space: &VariableSpace, actions: Vec<Action>) -> Result<Self> {
        for (i, action) in actions.iter().enumerate() {
            action.evidence.validate(space)?;
            if actions[..i].iter().any(|a| a.label == action.label) {
                return Err(Error::DuplicateLabel(action.label.clone()));
            }
        }
        Ok(ActionSet { actions })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionChoice {
    /// Index of the chosen action.
    pub best: usize,
    /// Expected utility of every action, in declaration order.
    pub expected_utilities: Vec<f64>,
}

/// Maximum expected utility action; the earliest declared wins ties.
pub fn choose_action(
    d: &AdditiveDecomposition,
    bn: &BayesNet,
    actions: &ActionSet,
) -> Result<ActionChoice> {
    if actions.actions.is_empty() {
        return Err(Error::InvalidArgument("no actions to choose from"));
    }
    let expected_utilities = actions
        .actions
        .iter()
        .map(|a| eu_factored(d, bn, &a.evidence))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &eu) in expected_utilities.iter().enumerate() {
        if eu > expected_utilities[best] {
            best = i;
        }
    }
    Ok(ActionChoice {
        best,
        expected_utilities,
    })
}

/// Junction-tree recombination of the clique marginals of `p`:
/// `q = prod_i p(C_i) / prod_{i>0} p(S_i)` with `S_i` the overlap of `C_i`
/// with its predecessors. `q` has the same marginal as `p` on every clique.
///
/// The cliques must cover the space and be listed in running-intersection order.
pub fn clique_marginal_projection(
    p: &ExplicitDistribution,
    cliques: &[Scope],
) -> Result<ExplicitDistribution> {
    let space = &p.space;
    for c in cliques {
        space.check_scope(c)?;
    }
    let mut seen = Scope::empty();
    let mut separators = Vec::with_capacity(cliques.len());
    for (i, c) in cliques.iter().enumerate() {
        let sep = c.intersection(&seen);
        if i > 0 && !cliques[..i].iter().any(|prev| sep.is_subset(prev)) {
            return Err(Error::RunningIntersection(i));
        }
        separators.push(sep);
        seen = seen.union(c);
    }
    if seen.len() != space.len() {
        return Err(Error::NotCovering);
    }
    let clique_tables: Vec<(Layout, Vec<f64>)> = cliques
        .iter()
        .map(|c| Ok((Layout::new(space, c), p.marginal(c)?)))
        .collect::<Result<_>>()?;
    let separator_tables: Vec<(Layout, Vec<f64>)> = separators
        .iter()
        .map(|s| Ok((Layout::new(space, s), p.marginal(s)?)))
        .collect::<Result<_>>()?;

    let cards = space.cardinalities();
    let mut state = alloc::vec![0; space.len()];
    let mut probs = Vec::with_capacity(p.probs.len());
    for _ in 0..p.probs.len() {
        let mut q = 1.0;
        for ((cl, ct), (sl, st)) in clique_tables.iter().zip(&separator_tables) {
            let denom = st[sl.index(&state)];
            if denom == 0.0 {
                q = 0.0;
                break;
            }
            q *= ct[cl.index(&state)] / denom;
        }
        probs.push(q);
        advance(&mut state, &cards);
    }
    ExplicitDistribution::new(space.clone(), probs)
}
