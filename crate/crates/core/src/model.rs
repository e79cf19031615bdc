//! Variable spaces, scopes, assignments and utility functions over them.
//!
//! Every table in the crate is laid out row-major over its scope in space
//! order, with the last variable varying fastest.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest number of states a dense table may have unless the guard is lifted.
pub const DENSE_STATE_LIMIT: u64 = 1 << 26;

/// A named variable with a finite ordered domain of value labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    name: String,
    domain: Vec<String>,
}

impl Variable {
    pub fn new<N, I, S>(name: N, domain: I) -> Self
    where
        N: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Variable {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// Ordered collection of variables; its product space is the set of states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableSpace {
    variables: Vec<Variable>,
}

impl VariableSpace {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        for (i, var) in variables.iter().enumerate() {
            if variables[..i].iter().any(|other| other.name == var.name) {
                return Err(Error::DuplicateVariable(var.name.clone()));
            }
            if var.domain.len() < 2 {
                return Err(Error::DomainTooSmall(var.name.clone()));
            }
            for (j, value) in var.domain.iter().enumerate() {
                if var.domain[..j].contains(value) {
                    return Err(Error::DuplicateValue {
                        variable: var.name.clone(),
                        value: value.clone(),
                    });
                }
            }
        }
        Ok(VariableSpace { variables })
    }

    /// Binary variables with domain `["0", "1"]`.
    pub fn binary<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| Variable::new(n.as_ref(), ["0", "1"]))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &Variable {
        &self.variables[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn cardinality(&self, index: usize) -> usize {
        self.variables[index].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Number of states of the full product space, saturating at `u64::MAX`.
    pub fn state_count(&self) -> u64 {
        self.variables
            .iter()
            .fold(1u64, |acc, v| acc.saturating_mul(v.cardinality() as u64))
    }

    /// Number of joint values of the variables in `scope`, saturating.
    pub fn scope_state_count(&self, scope: &Scope) -> u64 {
        scope.iter().fold(1u64, |acc, v| {
            acc.saturating_mul(self.cardinality(v) as u64)
        })
    }

    pub fn full_scope(&self) -> Scope {
        Scope((0..self.len()).collect())
    }

    /// Builds a scope from variable names; duplicates are rejected.
    pub fn scope<S: AsRef<str>>(&self, names: &[S]) -> Result<Scope> {
        let mut members = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let index = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownVariable(name.into()))?;
            if members.contains(&index) {
                return Err(Error::DuplicateVariable(name.into()));
            }
            members.push(index);
        }
        Ok(Scope::new(members))
    }

    pub fn check_scope(&self, scope: &Scope) -> Result<()> {
        match scope.iter().find(|&v| v >= self.len()) {
            Some(v) => Err(Error::VariableOutOfRange(v)),
            None => Ok(()),
        }
    }

    /// Names of the members of `scope`, in canonical order.
    pub fn names(&self, scope: &Scope) -> Vec<&str> {
        scope.iter().map(|v| self.variables[v].name()).collect()
    }

    /// Returns the state count if a dense table over the space is allowed.
    pub fn check_dense(&self, force: bool) -> Result<usize> {
        let size = self.state_count();
        if !force && size > DENSE_STATE_LIMIT {
            return Err(Error::GuardExceeded {
                what: "dense table",
                size,
                limit: DENSE_STATE_LIMIT,
            });
        }
        usize::try_from(size).map_err(|_| Error::GuardExceeded {
            what: "dense table",
            size,
            limit: usize::MAX as u64,
        })
    }

    /// Full state vector (value index per variable) of a row-major index.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut state = alloc::vec![0; self.len()];
        for v in (0..self.len()).rev() {
            let card = self.cardinality(v);
            state[v] = index % card;
            index /= card;
        }
        state
    }

    /// Builds an assignment from `(variable, value label)` pairs.
    pub fn assignment<A: AsRef<str>, B: AsRef<str>>(&self, pairs: &[(A, B)]) -> Result<Assignment> {
        let mut out = Assignment::new();
        for (name, label) in pairs {
            let (name, label) = (name.as_ref(), label.as_ref());
            let var = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownVariable(name.into()))?;
            if out.get(var).is_some() {
                return Err(Error::DuplicateVariable(name.into()));
            }
            let value =
                self.variables[var]
                    .value_index(label)
                    .ok_or_else(|| Error::UnknownValue {
                        variable: name.into(),
                        value: label.into(),
                    })?;
            out.bind(var, value);
        }
        Ok(out)
    }
}

/// A set of variables, stored as sorted variable indices.
///
/// The derived ordering compares the sorted index lists lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope(Vec<usize>);

impl Scope {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Scope(members)
    }

    pub fn empty() -> Self {
        Scope(Vec::new())
    }

    pub fn singleton(v: usize) -> Self {
        Scope(alloc::vec![v])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &Scope) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    pub fn union(&self, other: &Scope) -> Scope {
        Scope::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &Scope) -> Scope {
        Scope(self.iter().filter(|&v| other.contains(v)).collect())
    }

    pub fn difference(&self, other: &Scope) -> Scope {
        Scope(self.iter().filter(|&v| !other.contains(v)).collect())
    }

    /// Position of `v` within the scope.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }
}

impl FromIterator<usize> for Scope {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Scope::new(iter)
    }
}

/// Partial or full binding of variables to value indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<usize, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    /// Full assignment from a state vector.
    pub fn from_state(state: &[usize]) -> Self {
        Assignment(state.iter().copied().enumerate().collect())
    }

    pub fn with(mut self, var: usize, value: usize) -> Self {
        self.0.insert(var, value);
        self
    }

    pub fn bind(&mut self, var: usize, value: usize) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn scope(&self) -> Scope {
        Scope(self.0.keys().copied().collect())
    }

    pub fn validate(&self, space: &VariableSpace) -> Result<()> {
        for (var, value) in self.iter() {
            if var >= space.len() {
                return Err(Error::VariableOutOfRange(var));
            }
            if value >= space.cardinality(var) {
                return Err(Error::ValueOutOfRange {
                    variable: var,
                    value,
                });
            }
        }
        Ok(())
    }

    /// State vector of a full assignment.
    pub fn to_state(&self, space: &VariableSpace) -> Result<Vec<usize>> {
        self.validate(space)?;
        (0..space.len())
            .map(|v| self.get(v).ok_or(Error::Unbound(v)))
            .collect()
    }

    /// State vector with unbound variables set to their first domain value.
    pub fn or_first(&self, space: &VariableSpace) -> Result<Vec<usize>> {
        self.validate(space)?;
        Ok((0..space.len()).map(|v| self.get(v).unwrap_or(0)).collect())
    }

    /// True if every bound variable agrees with `state`.
    pub fn is_consistent(&self, state: &[usize]) -> bool {
        self.iter().all(|(var, value)| state[var] == value)
    }
}

/// Row-major index of a full assignment.
pub fn state_index(space: &VariableSpace, assignment: &Assignment) -> Result<usize> {
    let state = assignment.to_state(space)?;
    Ok(Layout::full(space).index(&state))
}

/// Strides of a row-major table over a scope, addressed by full state vectors.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    vars: Vec<usize>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl Layout {
    pub(crate) fn new(space: &VariableSpace, scope: &Scope) -> Self {
        let vars: Vec<usize> = scope.indices().to_vec();
        let cards: Vec<usize> = vars.iter().map(|&v| space.cardinality(v)).collect();
        let mut strides = alloc::vec![0; vars.len()];
        let mut size = 1usize;
        for i in (0..vars.len()).rev() {
            strides[i] = size;
            size = size.saturating_mul(cards[i]);
        }
        Layout {
            vars,
            cards,
            strides,
            size,
        }
    }

    pub(crate) fn full(space: &VariableSpace) -> Self {
        Self::new(space, &space.full_scope())
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    pub(crate) fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Index of the scope's sub-state within a full state vector.
    pub(crate) fn index(&self, state: &[usize]) -> usize {
        self.vars
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| state[v] * s)
            .sum()
    }

    /// Index given the scope-local values, in scope order.
    pub(crate) fn local_index(&self, local: &[usize]) -> usize {
        local.iter().zip(&self.strides).map(|(&x, &s)| x * s).sum()
    }
}

/// Advances a mixed-radix counter with the last digit fastest; false on wrap-around.
pub(crate) fn advance(digits: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < cards[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Advances only the positions listed in `free` of a full state vector.
pub(crate) fn advance_over(state: &mut [usize], free: &[usize], space: &VariableSpace) -> bool {
    for &v in free.iter().rev() {
        state[v] += 1;
        if state[v] < space.cardinality(v) {
            return true;
        }
        state[v] = 0;
    }
    false
}

/// Re-lays a row-major table given over the variables in `order` into canonical order.
pub fn reorder_to_canonical(
    space: &VariableSpace,
    order: &[usize],
    values: &[f64],
) -> Result<(Scope, Vec<f64>)> {
    for (i, &v) in order.iter().enumerate() {
        if v >= space.len() {
            return Err(Error::VariableOutOfRange(v));
        }
        if order[..i].contains(&v) {
            return Err(Error::DuplicateVariable(space.variable(v).name().into()));
        }
    }
    let scope = Scope::new(order.iter().copied());
    let canonical = Layout::new(space, &scope);
    if canonical.size() != values.len() {
        return Err(Error::LengthMismatch {
            expected: canonical.size(),
            found: values.len(),
        });
    }
    let given_cards: Vec<usize> = order.iter().map(|&v| space.cardinality(v)).collect();
    let mut state = alloc::vec![0; space.len()];
    let mut digits = alloc::vec![0; order.len()];
    let mut out = alloc::vec![0.0; values.len()];
    for &value in values {
        for (&v, &d) in order.iter().zip(&digits) {
            state[v] = d;
        }
        out[canonical.index(&state)] = value;
        advance(&mut digits, &given_cards);
    }
    Ok((scope, out))
}

/// Comparison threshold for values that are equal in exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceConfig {
    epsilon: f64,
}

impl ToleranceConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-9;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(
                "epsilon must be finite and nonnegative",
            ));
        }
        Ok(ToleranceConfig { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `epsilon * (1 + scale)`, where `scale` is the largest magnitude involved.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.epsilon * (1.0 + scale)
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

/// Anything that assigns a real value to each full state of a space.
pub trait UtilityFunction {
    fn space(&self) -> &VariableSpace;

    /// Value at a full state vector. The state must be in range.
    fn value_of_state(&self, state: &[usize]) -> f64;
}

/// Dense utility function over the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    space: VariableSpace,
    values: Vec<f64>,
}

impl UtilityTable {
    /// Dense table, refused above [`DENSE_STATE_LIMIT`] states.
    pub fn new(space: VariableSpace, values: Vec<f64>) -> Result<Self> {
        Self::build(space, values, false)
    }

    /// As [`UtilityTable::new`] but without the state-count guard.
    pub fn new_unguarded(space: VariableSpace, values: Vec<f64>) -> Result<Self> {
        Self::build(space, values, true)
    }

    fn build(space: VariableSpace, values: Vec<f64>, force: bool) -> Result<Self> {
        let size = space.check_dense(force)?;
        if values.len() != size {
            return Err(Error::LengthMismatch {
                expected: size,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(UtilityTable { space, values })
    }

    /// Tabulates `f` over every state, in row-major order.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(space: VariableSpace, mut f: F) -> Result<Self> {
        let size = space.check_dense(false)?;
        let cards = space.cardinalities();
        let mut state = alloc::vec![0; space.len()];
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            values.push(f(&state));
            advance(&mut state, &cards);
        }
        Self::new(space, values)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<f64> {
        Ok(self.values[state_index(&self.space, assignment)?])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Tolerance threshold scaled to this table's magnitude.
    pub fn threshold(&self, tol: &ToleranceConfig) -> f64 {
        tol.threshold(self.max_abs())
    }

    /// `a * u + b`; `a` must be positive so preferences are preserved.
    pub fn affine_transform(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(
                "affine scale must be positive and finite",
            ));
        }
        let values = self.values.iter().map(|v| a * v + b).collect();
        Self::new_unguarded(self.space.clone(), values)
    }
}

impl UtilityFunction for UtilityTable {
    fn space(&self) -> &VariableSpace {
        &self.space
    }

    fn value_of_state(&self, state: &[usize]) -> f64 {
        let mut index = 0;
        for (v, &x) in state.iter().enumerate() {
            index = index * self.space.cardinality(v) + x;
        }
        self.values[index]
    }
}

/// One summand `f(Z)` of an additive decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityFactor {
    pub scope: Scope,
    pub values: Vec<f64>,
}

impl UtilityFactor {
    pub fn new(scope: Scope, values: Vec<f64>) -> Self {
        UtilityFactor { scope, values }
    }
}

/// `u = sum_i f_i(Z_i)` with no `Z_i` contained in another.
#[derive(Clone, Debug)]
pub struct AdditiveDecomposition {
    space: VariableSpace,
    factors: Vec<UtilityFactor>,
    layouts: Vec<Layout>,
}

impl AdditiveDecomposition {
    pub fn new(space: VariableSpace, factors: Vec<UtilityFactor>) -> Result<Self> {
        let mut layouts = Vec::with_capacity(factors.len());
        for (i, factor) in factors.iter().enumerate() {
            space.check_scope(&factor.scope)?;
            let layout = Layout::new(&space, &factor.scope);
            if layout.size() != factor.values.len() {
                return Err(Error::LengthMismatch {
                    expected: layout.size(),
                    found: factor.values.len(),
                });
            }
            if factor.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let nested = factors
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && factor.scope.is_subset(&other.scope));
            if nested {
                return Err(Error::NestedFactorScopes);
            }
            layouts.push(layout);
        }
        Ok(AdditiveDecomposition {
            space,
            factors,
            layouts,
        })
    }

    pub fn empty(space: VariableSpace) -> Self {
        AdditiveDecomposition {
            space,
            factors: Vec::new(),
            layouts: Vec::new(),
        }
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn factors(&self) -> &[UtilityFactor] {
        &self.factors
    }

    pub fn scopes(&self) -> impl Iterator<Item = &Scope> {
        self.factors.iter().map(|f| &f.scope)
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<f64> {
        let state = assignment.to_state(&self.space)?;
        Ok(self.value_of_state(&state))
    }

    /// Value of factor `i` at a full state vector.
    pub fn factor_value(&self, i: usize, state: &[usize]) -> f64 {
        self.factors[i].values[self.layouts[i].index(state)]
    }

    /// Largest factor-wise magnitude bound `sum_i max |f_i|`.
    pub fn magnitude_bound(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .sum()
    }
}

impl PartialEq for AdditiveDecomposition {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.factors == other.factors
    }
}

impl UtilityFunction for AdditiveDecomposition {
    fn space(&self) -> &VariableSpace {
        &self.space
    }

    fn value_of_state(&self, state: &[usize]) -> f64 {
        (0..self.factors.len())
            .map(|i| self.factor_value(i, state))
            .sum()
    }
}
