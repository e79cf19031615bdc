//! Decision procedures for utility, additive, conditional additive and
//! generalized additive independence.
//!
//! Each test works on the functional form that characterizes the independence
//! (`f + g*h` for utility independence, sums of factors for the additive
//! kinds) rather than on lotteries. Reference values default to the first
//! value of every domain; verdicts do not depend on the reference, witnesses do.

use alloc::vec::Vec;

use crate::decompose;
use crate::error::{Error, Result};
use crate::model::{advance, Assignment, Layout, Scope, ToleranceConfig, UtilityTable};

/// Table of `u` over `x` with every other variable fixed by `fix`.
pub fn conditional_utility(u: &UtilityTable, x: &Scope, fix: &Assignment) -> Result<Vec<f64>> {
    let space = u.space();
    space.check_scope(x)?;
    fix.validate(space)?;
    if fix.scope() != space.full_scope().difference(x) {
        return Err(Error::InvalidArgument(
            "conditioning assignment must bind exactly the complement of the scope",
        ));
    }
    let layout = Layout::new(space, x);
    let full = Layout::full(space);
    let mut state = fix.or_first(space)?;
    let mut local = alloc::vec![0; x.len()];
    let mut out = Vec::with_capacity(layout.size());
    loop {
        for (&v, &d) in x.indices().iter().zip(&local) {
            state[v] = d;
        }
        out.push(u.values()[full.index(&state)]);
        if !advance(&mut local, layout.cards()) {
            break;
        }
    }
    Ok(out)
}

/// Witness for `u(x, y) = f(y) + g(y) h(x)` with `g > 0`.
///
/// `h` is laid out over `X`; `f` and `g` over the complement of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct UiWitness {
    pub h: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UiVerdict {
    pub holds: bool,
    pub witness: Option<UiWitness>,
}

/// Utility independence of `x` from the rest, using first-value references.
pub fn test_utility_independence(
    u: &UtilityTable,
    x: &Scope,
    tol: &ToleranceConfig,
) -> Result<UiVerdict> {
    test_utility_independence_at(u, x, &Assignment::new(), tol)
}

/// Utility independence of `x`; `reference` picks the conditioning state of the complement.
pub fn test_utility_independence_at(
    u: &UtilityTable,
    x: &Scope,
    reference: &Assignment,
    tol: &ToleranceConfig,
) -> Result<UiVerdict> {
    let space = u.space();
    space.check_scope(x)?;
    if x.is_empty() || x.len() == space.len() {
        return Err(Error::InvalidArgument(
            "utility independence needs a nonempty proper subset",
        ));
    }
    let reference = reference.or_first(space)?;
    let rest = space.full_scope().difference(x);
    let x_layout = Layout::new(space, x);
    let rest_layout = Layout::new(space, &rest);
    let (cols, rows) = (x_layout.size(), rest_layout.size());

    // rows indexed by the complement, columns by x
    let mut m = alloc::vec![0.0; rows * cols];
    let cards = space.cardinalities();
    let mut state = alloc::vec![0; space.len()];
    for &value in u.values() {
        m[rest_layout.index(&state) * cols + x_layout.index(&state)] = value;
        advance(&mut state, &cards);
    }
    let row = |r: usize| &m[r * cols..(r + 1) * cols];
    let thr = u.threshold(tol);
    let h: Vec<f64> = row(rest_layout.index(&reference)).to_vec();

    let (mut hi, mut lo) = (0, 0);
    for (i, &v) in h.iter().enumerate() {
        if v > h[hi] {
            hi = i;
        }
        if v < h[lo] {
            lo = i;
        }
    }
    let spread = h[hi] - h[lo];

    if spread <= thr {
        // constant at the reference: UI only under total indifference on x
        let mut f = Vec::with_capacity(rows);
        for r in 0..rows {
            let values = row(r);
            let (min, max) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            if max - min > thr {
                return Ok(UiVerdict {
                    holds: false,
                    witness: None,
                });
            }
            f.push(values[0]);
        }
        return Ok(UiVerdict {
            holds: true,
            witness: Some(UiWitness {
                h: alloc::vec![0.0; cols],
                f,
                g: alloc::vec![1.0; rows],
            }),
        });
    }

    let mut f = Vec::with_capacity(rows);
    let mut g = Vec::with_capacity(rows);
    for r in 0..rows {
        let values = row(r);
        let scale = (values[hi] - values[lo]) / spread;
        if !(scale > tol.epsilon()) {
            return Ok(UiVerdict {
                holds: false,
                witness: None,
            });
        }
        let offset = values[hi] - scale * h[hi];
        if values
            .iter()
            .zip(&h)
            .any(|(&v, &hx)| (v - offset - scale * hx).abs() > thr)
        {
            return Ok(UiVerdict {
                holds: false,
                witness: None,
            });
        }
        f.push(offset);
        g.push(scale);
    }
    Ok(UiVerdict {
        holds: true,
        witness: Some(UiWitness { h, f, g }),
    })
}

/// Triple `(X, Z, Y)` of pairwise disjoint scopes for CAI(X, Z, Y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaiQuery {
    pub x: Scope,
    pub z: Scope,
    pub y: Scope,
}

impl CaiQuery {
    pub fn new(x: Scope, z: Scope, y: Scope) -> Result<Self> {
        if !x.is_disjoint(&z) || !x.is_disjoint(&y) || !z.is_disjoint(&y) {
            return Err(Error::Overlap);
        }
        Ok(CaiQuery { x, z, y })
    }

    /// The query with `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        CaiQuery {
            x: self.y.clone(),
            z: self.z.clone(),
            y: self.x.clone(),
        }
    }
}

/// CAI(X, Z, Y): does `u` split as `f(X, Z) + g(Z, Y)`? The scopes must partition the space.
pub fn test_cai(u: &UtilityTable, q: &CaiQuery, tol: &ToleranceConfig) -> Result<bool> {
    test_cai_at(u, q, &Assignment::new(), tol)
}

/// [`test_cai`] with explicit reference values for `X` and `Y`.
pub fn test_cai_at(
    u: &UtilityTable,
    q: &CaiQuery,
    reference: &Assignment,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let space = u.space();
    for s in [&q.x, &q.z, &q.y] {
        space.check_scope(s)?;
    }
    if !q.x.is_disjoint(&q.z) || !q.x.is_disjoint(&q.y) || !q.z.is_disjoint(&q.y) {
        return Err(Error::Overlap);
    }
    if q.x.len() + q.y.len() + q.z.len() != space.len() {
        return Err(Error::NotCovering);
    }
    if q.x.is_empty() || q.y.is_empty() {
        return Ok(true);
    }
    let reference = reference.or_first(space)?;
    let full = Layout::full(space);
    let strides = full.strides();
    let offset = |scope: &Scope, state: &[usize]| -> usize {
        scope.iter().map(|v| state[v] * strides[v]).sum()
    };
    let x0 = offset(&q.x, &reference);
    let y0 = offset(&q.y, &reference);
    let values = u.values();
    let thr = u.threshold(tol);

    let cards = space.cardinalities();
    let mut state = alloc::vec![0; space.len()];
    for (index, &value) in values.iter().enumerate() {
        let ox = offset(&q.x, &state);
        let oy = offset(&q.y, &state);
        let oz = index - ox - oy;
        // f(x, z) = u(x, y0, z);  g(y, z) = u(x0, y, z) - u(x0, y0, z)
        let fitted = values[ox + y0 + oz] + values[x0 + oy + oz] - values[x0 + y0 + oz];
        if (value - fitted).abs() > thr {
            return Ok(false);
        }
        advance(&mut state, &cards);
    }
    Ok(true)
}

/// CAI for disjoint `x`, `z`, `y` that need not cover the space: true iff the
/// remaining variables can be split into `R1`, `R2` with CAI(x+R1, z, y+R2).
pub fn test_cai_extended(
    u: &UtilityTable,
    x: &Scope,
    z: &Scope,
    y: &Scope,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let space = u.space();
    for s in [x, z, y] {
        space.check_scope(s)?;
    }
    if !x.is_disjoint(z) || !x.is_disjoint(y) || !z.is_disjoint(y) {
        return Err(Error::Overlap);
    }
    let rest = space.full_scope().difference(&x.union(z).union(y));
    if rest.len() >= 32 {
        return Err(Error::GuardExceeded {
            what: "remainder partitions",
            size: rest.len() as u64,
            limit: 31,
        });
    }
    for mask in 0u32..(1u32 << rest.len()) {
        let to_x: Scope = rest
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, v)| v)
            .collect();
        let to_y = rest.difference(&to_x);
        let q = CaiQuery {
            x: x.union(&to_x),
            z: z.clone(),
            y: y.union(&to_y),
        };
        if test_cai(u, &q, tol)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn check_parts(u: &UtilityTable, parts: &[Scope]) -> Result<()> {
    let space = u.space();
    for p in parts {
        space.check_scope(p)?;
    }
    let covered = parts.iter().fold(Scope::empty(), |acc, p| acc.union(p));
    if covered.len() != space.len() {
        return Err(Error::NotCovering);
    }
    Ok(())
}

/// Additive independence of a partition: `u = sum_i f_i(part_i)`.
pub fn test_additive_partition(
    u: &UtilityTable,
    parts: &[Scope],
    tol: &ToleranceConfig,
) -> Result<bool> {
    check_parts(u, parts)?;
    if parts.iter().map(Scope::len).sum::<usize>() != u.space().len() {
        return Err(Error::Overlap);
    }
    decomposes_over(u, parts, tol)
}

/// Generalized additive independence of possibly overlapping scopes.
pub fn test_gai(u: &UtilityTable, scopes: &[Scope], tol: &ToleranceConfig) -> Result<bool> {
    check_parts(u, scopes)?;
    decomposes_over(u, scopes, tol)
}

fn decomposes_over(u: &UtilityTable, scopes: &[Scope], tol: &ToleranceConfig) -> Result<bool> {
    let terms = decompose::interaction_terms(u, &Assignment::new(), None, tol)?;
    Ok(terms
        .iter()
        .all(|t| scopes.iter().any(|s| t.scope.is_subset(s))))
}
