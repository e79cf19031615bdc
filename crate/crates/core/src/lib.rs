//! Independence structure of discrete multi-attribute utility functions.
//!
//! The crate decides utility, additive, conditional-additive and generalized
//! additive independence on dense utility tables, builds the perfect
//! CA-independence graph, decomposes a utility over the maximal cliques of
//! that graph, and computes expected utility against Bayesian networks by
//! summing per-factor expectations.
//!
//! It is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]
// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod decompose;
mod error;
pub mod expectation;
pub mod graph;
pub mod independence;
pub mod model;

pub use error::{Error, Result};
pub use model::{
    state_index, AdditiveDecomposition, Assignment, Scope, ToleranceConfig, UtilityFactor,
    UtilityFunction, UtilityTable, Variable, VariableSpace, DENSE_STATE_LIMIT,
};
