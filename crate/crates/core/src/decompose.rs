//! Interaction terms and additive decompositions.
//!
//! With a reference state `r`, the interaction term of a scope `S` is
//!
//! ```text
//! I_S(x_S) = sum_{T subset of S} (-1)^{|S - T|} u(x_T, r_{V - T})
//! ```
//!
//! and `u = sum_S I_S`. `I_S` vanishes wherever a coordinate of `x_S` equals the
//! reference, so all terms are computed at once by a per-axis difference
//! transform of the table: after subtracting the reference slice along every
//! axis, the entry at state `s` holds `I_S(s_S)` for `S = {v : s_v != r_v}`.
//!
//! `u` has an additive decomposition over scopes `Z_1..Z_k` exactly when every
//! nonzero interaction term lives inside some `Z_i`; the same criterion decides
//! whether a decomposition can avoid a family of scopes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{maximal_cliques, UndirectedGraph};
use crate::model::{
    advance, AdditiveDecomposition, Assignment, Layout, Scope, ToleranceConfig, UtilityFactor,
    UtilityFunction, UtilityTable,
};

/// Largest variable count for which all `2^n` interaction scopes are computed.
pub const MAX_FULL_INTERACTION_VARIABLES: usize = 20;

/// Interaction component of `u` on `scope`, relative to `reference`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    pub scope: Scope,
    pub reference: Assignment,
    /// Row-major over `scope`.
    pub values: Vec<f64>,
}

impl InteractionTerm {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Subtracts the reference slice along each axis of a row-major table.
fn difference_transform(
    values: &mut [f64],
    cards: &[usize],
    strides: &[usize],
    reference: &[usize],
) {
    for axis in 0..cards.len() {
        let (card, stride, r) = (cards[axis], strides[axis], reference[axis]);
        let block = card * stride;
        for outer in (0..values.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let anchor = values[base + r * stride];
                for k in (0..card).filter(|&k| k != r) {
                    values[base + k * stride] -= anchor;
                }
            }
        }
    }
}

/// Nonzero interaction terms of `u`, plus the constant (empty-scope) term.
///
/// Unbound variables of `reference` default to their first value. With
/// `restrict`, only scopes contained in one of the given scopes are computed;
/// without it every scope is, which needs at most
/// [`MAX_FULL_INTERACTION_VARIABLES`] variables. Terms are sorted by scope.
pub fn interaction_terms(
    u: &UtilityTable,
    reference: &Assignment,
    restrict: Option<&[Scope]>,
    tol: &ToleranceConfig,
) -> Result<Vec<InteractionTerm>> {
    let space = u.space();
    let reference_state = reference.or_first(space)?;
    let full_reference = Assignment::from_state(&reference_state);
    let containers: Vec<Scope> = match restrict {
        Some(scopes) => {
            for s in scopes {
                space.check_scope(s)?;
            }
            let mut maximal: Vec<Scope> = scopes
                .iter()
                .filter(|s| {
                    !scopes
                        .iter()
                        .any(|other| other.len() > s.len() && s.is_subset(other))
                })
                .cloned()
                .collect();
            maximal.sort();
            maximal.dedup();
            maximal
        }
        None => {
            if space.len() > MAX_FULL_INTERACTION_VARIABLES {
                return Err(Error::GuardExceeded {
                    what: "interaction scopes",
                    size: space.len() as u64,
                    limit: MAX_FULL_INTERACTION_VARIABLES as u64,
                });
            }
            alloc::vec![space.full_scope()]
        }
    };

    let full = Layout::full(space);
    let mut tables: BTreeMap<Scope, Vec<f64>> = BTreeMap::new();
    for container in &containers {
        // slice of u over the container, everything else at the reference
        let layout = Layout::new(space, container);
        let mut state = reference_state.clone();
        let mut local = alloc::vec![0; container.len()];
        let mut slice = Vec::with_capacity(layout.size());
        loop {
            for (&v, &d) in container.indices().iter().zip(&local) {
                state[v] = d;
            }
            slice.push(u.values()[full.index(&state)]);
            if !advance(&mut local, layout.cards()) {
                break;
            }
        }
        let local_reference: Vec<usize> = container.iter().map(|v| reference_state[v]).collect();
        difference_transform(
            &mut slice,
            layout.cards(),
            layout.strides(),
            &local_reference,
        );

        let mut by_support: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut local = alloc::vec![0; container.len()];
        for &entry in &slice {
            let mut mask = 0u64;
            for (i, (&d, &r)) in local.iter().zip(&local_reference).enumerate() {
                if d != r {
                    mask |= 1 << i;
                }
            }
            let table = by_support.entry(mask).or_insert_with(|| {
                let size = (0..container.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| layout.cards()[i])
                    .product();
                alloc::vec![0.0; size]
            });
            let mut index = 0;
            for i in (0..container.len()).filter(|i| mask & (1 << i) != 0) {
                index = index * layout.cards()[i] + local[i];
            }
            table[index] = entry;
            advance(&mut local, layout.cards());
        }
        for (mask, table) in by_support {
            let scope: Scope = container
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v)
                .collect();
            tables.entry(scope).or_insert(table);
        }
    }
    tables
        .entry(Scope::empty())
        .or_insert_with(|| alloc::vec![u.values()[full.index(&reference_state)]]);

    let thr = u.threshold(tol);
    Ok(tables
        .into_iter()
        .filter(|(scope, table)| scope.is_empty() || table.iter().any(|v| v.abs() > thr))
        .map(|(scope, values)| InteractionTerm {
            scope,
            reference: full_reference.clone(),
            values,
        })
        .collect())
}

/// Adds `term` into a table over `target`, which must contain the term's scope.
fn accumulate(
    space: &crate::model::VariableSpace,
    target: &Scope,
    table: &mut [f64],
    term: &InteractionTerm,
) {
    let target_layout = Layout::new(space, target);
    let term_layout = Layout::new(space, &term.scope);
    let positions: Vec<usize> = term
        .scope
        .iter()
        .map(|v| target.position(v).expect("term scope inside target"))
        .collect();
    let mut local = alloc::vec![0; target.len()];
    let mut picked = alloc::vec![0; term.scope.len()];
    for cell in table.iter_mut() {
        for (p, &pos) in picked.iter_mut().zip(&positions) {
            *p = local[pos];
        }
        *cell += term.values[term_layout.local_index(&picked)];
        advance(&mut local, target_layout.cards());
    }
}

/// Outcome of [`decompose_over_cliques`].
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub decomposition: AdditiveDecomposition,
    pub max_residual: f64,
    /// Each nonzero interaction scope with the clique it was folded into.
    pub clique_assignment: Vec<(Scope, Scope)>,
}

/// Decomposes `u` as a sum of one factor per maximal clique of `graph`.
///
/// Fails with [`Error::ResidualTooLarge`] when `graph` is not an independence
/// map of `u`.
pub fn decompose_over_cliques(
    u: &UtilityTable,
    graph: &UndirectedGraph,
    reference: &Assignment,
    tol: &ToleranceConfig,
) -> Result<DecompositionReport> {
    let space = u.space();
    if graph.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let mut cliques = maximal_cliques(graph);
    if cliques.is_empty() {
        cliques.push(Scope::empty());
    }
    let terms = interaction_terms(u, reference, Some(&cliques), tol)?;
    let mut tables: Vec<Vec<f64>> = cliques
        .iter()
        .map(|c| alloc::vec![0.0; Layout::new(space, c).size()])
        .collect();
    let mut clique_assignment = Vec::with_capacity(terms.len());
    for term in &terms {
        let owner = cliques
            .iter()
            .position(|c| term.scope.is_subset(c))
            .expect("restricted terms lie inside some clique");
        accumulate(space, &cliques[owner], &mut tables[owner], term);
        clique_assignment.push((term.scope.clone(), cliques[owner].clone()));
    }
    let factors = cliques
        .into_iter()
        .zip(tables)
        .map(|(scope, values)| UtilityFactor::new(scope, values))
        .collect();
    let decomposition = AdditiveDecomposition::new(space.clone(), factors)?;
    let max_residual = residual(u, &decomposition)?;
    let threshold = u.threshold(tol);
    if !(max_residual <= threshold) {
        return Err(Error::ResidualTooLarge {
            residual: max_residual,
            threshold,
        });
    }
    Ok(DecompositionReport {
        decomposition,
        max_residual,
        clique_assignment,
    })
}

/// A decomposition of `u` none of whose factor scopes contains any scope in
/// `avoid`, or `None` if no such decomposition exists.
///
/// Factors are the nonzero interaction terms, each folded into the first
/// maximal nonzero scope that contains it.
pub fn decompose_avoiding(
    u: &UtilityTable,
    avoid: &[Scope],
    reference: &Assignment,
    tol: &ToleranceConfig,
) -> Result<Option<AdditiveDecomposition>> {
    let space = u.space();
    for a in avoid {
        space.check_scope(a)?;
        if a.is_empty() {
            return Err(Error::InvalidArgument("avoided scopes must be nonempty"));
        }
    }
    let terms = interaction_terms(u, reference, None, tol)?;
    if terms
        .iter()
        .any(|t| avoid.iter().any(|a| a.is_subset(&t.scope)))
    {
        return Ok(None);
    }
    let mut owners: Vec<Scope> = terms
        .iter()
        .filter(|t| {
            !terms
                .iter()
                .any(|o| o.scope.len() > t.scope.len() && t.scope.is_subset(&o.scope))
        })
        .map(|t| t.scope.clone())
        .collect();
    owners.sort();
    let mut tables: Vec<Vec<f64>> = owners
        .iter()
        .map(|s| alloc::vec![0.0; Layout::new(space, s).size()])
        .collect();
    for term in &terms {
        let owner = owners
            .iter()
            .position(|s| term.scope.is_subset(s))
            .expect("maximal scopes cover every term");
        accumulate(space, &owners[owner], &mut tables[owner], term);
    }
    let factors = owners
        .into_iter()
        .zip(tables)
        .map(|(scope, values)| UtilityFactor::new(scope, values))
        .collect();
    AdditiveDecomposition::new(space.clone(), factors).map(Some)
}

/// Largest absolute difference between `u` and `d` over all states.
pub fn residual(u: &UtilityTable, d: &AdditiveDecomposition) -> Result<f64> {
    let space = u.space();
    if d.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let cards = space.cardinalities();
    let mut state = alloc::vec![0; space.len()];
    let mut worst = 0.0f64;
    for &value in u.values() {
        worst = worst.max((value - d.value_of_state(&state)).abs());
        advance(&mut state, &cards);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_perfect_map;
    use crate::model::{Variable, VariableSpace};
    use alloc::vec;

    fn binary(n: usize, f: impl Fn(&[usize]) -> f64) -> UtilityTable {
        let names: Vec<_> = ["x", "y", "z", "w"][..n].to_vec();
        UtilityTable::from_fn(VariableSpace::binary(&names).unwrap(), |s| f(s)).unwrap()
    }

    fn s(v: &[usize]) -> Scope {
        Scope::new(v.iter().copied())
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    /// Inclusion-exclusion straight from the definition.
    fn term_by_definition(
        u: &UtilityTable,
        scope: &Scope,
        reference: &[usize],
        at: &[usize],
    ) -> f64 {
        let k = scope.len();
        let mut total = 0.0;
        for mask in 0..(1usize << k) {
            let mut state = reference.to_vec();
            for (i, v) in scope.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    state[v] = at[i];
                }
            }
            let sign = if (k - mask.count_ones() as usize).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            total += sign * u.value_of_state(&state);
        }
        total
    }

    #[test]
    fn chain_terms() {
        let u = binary(3, |s| (s[0] * s[1] + s[1] * s[2]) as f64);
        let terms = interaction_terms(&u, &Assignment::new(), None, &tol()).unwrap();
        let scopes: Vec<_> = terms.iter().map(|t| t.scope.clone()).collect();
        assert_eq!(scopes, vec![Scope::empty(), s(&[0, 1]), s(&[1, 2])]);
        assert_eq!(terms[0].values, vec![0.0]);
        assert_eq!(terms[1].values, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(terms[2].values, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_and_additive_terms() {
        let c = binary(3, |_| 4.5);
        let terms = interaction_terms(&c, &Assignment::new(), None, &tol()).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].scope, Scope::empty());
        assert_eq!(terms[0].values, vec![4.5]);

        let a = binary(2, |s| (s[0] + s[1]) as f64);
        let terms = interaction_terms(&a, &Assignment::new(), None, &tol()).unwrap();
        let scopes: Vec<_> = terms.iter().map(|t| t.scope.clone()).collect();
        assert_eq!(scopes, vec![Scope::empty(), s(&[0]), s(&[1])]);
        assert_eq!(terms[1].values, vec![0.0, 1.0]);
        assert_eq!(terms[2].values, vec![0.0, 1.0]);
    }

    #[test]
    fn transform_matches_definition_on_mixed_domains() {
        let space = VariableSpace::new(vec![
            Variable::new("a", ["0", "1", "2"]),
            Variable::new("b", ["0", "1"]),
            Variable::new("c", ["0", "1", "2", "3"]),
        ])
        .unwrap();
        let u = UtilityTable::from_fn(space.clone(), |s| {
            let (a, b, c) = (s[0] as f64, s[1] as f64, s[2] as f64);
            a * a * b - 0.5 * c * a + (b + 1.0) * c * c * a + 3.0 * b
        })
        .unwrap();
        let reference = [2, 1, 1];
        let terms = interaction_terms(
            &u,
            &Assignment::from_state(&reference),
            None,
            &ToleranceConfig::new(0.0).unwrap(),
        )
        .unwrap();
        for term in &terms {
            let layout = Layout::new(&space, &term.scope);
            let mut local = vec![0; term.scope.len()];
            for &value in &term.values {
                let expected = term_by_definition(&u, &term.scope, &reference, &local);
                assert!((value - expected).abs() < 1e-9, "{:?}", term.scope);
                advance(&mut local, layout.cards());
            }
        }
        // reconstruction
        for i in 0..u.values().len() {
            let state = space.decode(i);
            let total: f64 = terms
                .iter()
                .map(|t| {
                    let local: Vec<usize> = t.scope.iter().map(|v| state[v]).collect();
                    t.values[Layout::new(&space, &t.scope).local_index(&local)]
                })
                .sum();
            assert!((total - u.values()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn restricted_terms_agree_with_full() {
        let u = binary(4, |s| (s[0] * s[1] + 2 * s[1] * s[2] * s[3] + s[3]) as f64);
        let full = interaction_terms(&u, &Assignment::new(), None, &tol()).unwrap();
        let restricted = interaction_terms(
            &u,
            &Assignment::new(),
            Some(&[s(&[0, 1]), s(&[1, 2, 3])]),
            &tol(),
        )
        .unwrap();
        assert_eq!(full, restricted);
    }

    #[test]
    fn guard_on_full_enumeration() {
        let names: Vec<_> = (0..21).map(|i| alloc::format!("v{i}")).collect();
        let u = UtilityTable::from_fn(VariableSpace::binary(&names).unwrap(), |_| 0.0).unwrap();
        let err = interaction_terms(&u, &Assignment::new(), None, &tol()).unwrap_err();
        assert!(err.is_guard());
    }

    #[test]
    fn chain_over_cliques() {
        let u = binary(3, |s| (s[0] * s[1] + s[1] * s[2]) as f64);
        let g = build_perfect_map(&u, &tol());
        let report = decompose_over_cliques(&u, &g, &Assignment::new(), &tol()).unwrap();
        let f = report.decomposition.factors();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].scope, s(&[0, 1]));
        assert_eq!(f[0].values, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(f[1].scope, s(&[1, 2]));
        assert_eq!(f[1].values, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(report.max_residual, 0.0);
        for i in 0..8 {
            let st = u.space().decode(i);
            assert_eq!(report.decomposition.value_of_state(&st), u.values()[i]);
        }
    }

    #[test]
    fn health_wealth_single_clique() {
        let space = VariableSpace::new(vec![
            Variable::new("health", ["H", "Hbar"]),
            Variable::new("wealth", ["W", "Wbar"]),
        ])
        .unwrap();
        let u = UtilityTable::new(space, vec![5.0, 2.0, 1.0, 0.0]).unwrap();
        let g = build_perfect_map(&u, &tol());
        let report = decompose_over_cliques(&u, &g, &Assignment::new(), &tol()).unwrap();
        let f = report.decomposition.factors();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].scope, s(&[0, 1]));
        assert_eq!(f[0].values, u.values());
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn constant_over_empty_graph() {
        let u = binary(3, |_| 7.0);
        let g = UndirectedGraph::new(u.space().clone());
        let report = decompose_over_cliques(&u, &g, &Assignment::new(), &tol()).unwrap();
        let f = report.decomposition.factors();
        assert_eq!(f.len(), 3);
        assert_eq!(f[0].values, vec![7.0, 7.0]);
        assert_eq!(f[1].values, vec![0.0, 0.0]);
        assert_eq!(f[2].values, vec![0.0, 0.0]);
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn invalid_map_is_reported() {
        let u = binary(3, |s| (s[0] * s[1] + s[1] * s[2]) as f64);
        let mut g = UndirectedGraph::new(u.space().clone());
        g.add_edge(0, 1).unwrap();
        let err = decompose_over_cliques(&u, &g, &Assignment::new(), &tol()).unwrap_err();
        assert!(matches!(err, Error::ResidualTooLarge { .. }));
    }

    #[test]
    fn avoiding_examples() {
        let chain = binary(3, |s| (s[0] * s[1] + s[1] * s[2]) as f64);
        let d = decompose_avoiding(&chain, &[s(&[0, 2])], &Assignment::new(), &tol()).unwrap();
        let d = d.unwrap();
        assert!(d.scopes().all(|sc| !s(&[0, 2]).is_subset(sc)));
        assert_eq!(residual(&chain, &d).unwrap(), 0.0);

        let tri = binary(3, |s| (s[0] * s[1] + s[1] * s[2] + s[0] * s[2]) as f64);
        assert!(
            decompose_avoiding(&tri, &[s(&[0, 1])], &Assignment::new(), &tol())
                .unwrap()
                .is_none()
        );

        let additive = binary(3, |s| (s[0] + s[1] + s[2]) as f64);
        let d = decompose_avoiding(
            &additive,
            &[s(&[0, 1]), s(&[1, 2])],
            &Assignment::new(),
            &tol(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(residual(&additive, &d).unwrap(), 0.0);
        assert!(
            decompose_avoiding(&additive, &[Scope::empty()], &Assignment::new(), &tol()).is_err()
        );
    }

    #[test]
    fn residual_examples() {
        let c = binary(2, |_| 3.0);
        assert_eq!(
            residual(&c, &AdditiveDecomposition::empty(c.space().clone())).unwrap(),
            3.0
        );

        let u = binary(3, |s| (s[0] * s[1] + s[1] * s[2]) as f64);
        let g = build_perfect_map(&u, &tol());
        let report = decompose_over_cliques(&u, &g, &Assignment::new(), &tol()).unwrap();
        let mut factors = report.decomposition.factors().to_vec();
        factors[1].values[2] += 1.0;
        let bumped = AdditiveDecomposition::new(u.space().clone(), factors).unwrap();
        assert!(residual(&u, &bumped).unwrap() >= 1.0);

        let other = binary(2, |_| 0.0);
        assert_eq!(
            residual(&u, &AdditiveDecomposition::empty(other.space().clone())),
            Err(Error::SpaceMismatch)
        );
    }
}
