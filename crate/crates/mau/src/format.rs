//! JSON model files: utilities (dense or factored), Bayesian networks,
//! explicit distributions and action sets.
//!
//! Tables are row-major with the last listed variable varying fastest. A dense
//! utility's `order` and a factor's `scope` may list variables in any order;
//! the values follow that listing. CPT parents must be listed in variable
//! order.

use std::collections::BTreeMap;

use mau_core::expectation::{Action, ActionSet, BayesNet, Cpt, ExplicitDistribution};
use mau_core::model::reorder_to_canonical;
use mau_core::{
    AdditiveDecomposition, Assignment, Scope, UtilityFactor, UtilityTable, Variable, VariableSpace,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub scope: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum UtilitySpec {
    Dense {
        order: Vec<String>,
        values: Vec<f64>,
    },
    Factored {
        factors: Vec<FactorSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityFile {
    pub variables: Vec<VariableSpec>,
    pub utility: UtilitySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptSpec {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesNetFile {
    pub variables: Vec<VariableSpec>,
    pub cpts: Vec<CptSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub order: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub label: String,
    #[serde(default)]
    pub evidence: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsFile {
    pub actions: Vec<ActionSpec>,
}

/// A utility as loaded from a file.
#[derive(Clone, Debug)]
pub enum Utility {
    Dense(UtilityTable),
    Factored(AdditiveDecomposition),
}

impl Utility {
    pub fn space(&self) -> &VariableSpace {
        match self {
            Utility::Dense(u) => u.space(),
            Utility::Factored(d) => d.space(),
        }
    }

    /// Dense table; a factored utility is tabulated, subject to the state guard.
    pub fn to_dense(&self, force: bool) -> Result<UtilityTable, CliError> {
        match self {
            Utility::Dense(u) => Ok(u.clone()),
            Utility::Factored(d) => {
                let space = d.space().clone();
                let size = space.check_dense(force)?;
                let mut values = Vec::with_capacity(size);
                for i in 0..size {
                    values.push(mau_core::UtilityFunction::value_of_state(
                        d,
                        &space.decode(i),
                    ));
                }
                Ok(UtilityTable::new_unguarded(space, values)?)
            }
        }
    }
}

/// A probability model accepted by `eu`.
#[derive(Clone, Debug)]
pub enum ProbabilityModel {
    Network(BayesNet),
    Explicit(ExplicitDistribution),
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

pub fn build_space(specs: &[VariableSpec]) -> Result<VariableSpace, CliError> {
    let vars = specs
        .iter()
        .map(|v| Variable::new(v.name.as_str(), v.domain.iter().map(String::as_str)))
        .collect();
    Ok(VariableSpace::new(vars)?)
}

pub fn space_specs(space: &VariableSpace) -> Vec<VariableSpec> {
    space
        .variables()
        .iter()
        .map(|v| VariableSpec {
            name: v.name().to_string(),
            domain: v.domain().to_vec(),
        })
        .collect()
}

fn indices(space: &VariableSpace, names: &[String]) -> Result<Vec<usize>, CliError> {
    names
        .iter()
        .map(|n| {
            space
                .index_of(n)
                .ok_or_else(|| CliError::from(mau_core::Error::UnknownVariable(n.clone())))
        })
        .collect()
}

pub fn parse_utility(text: &str, force: bool) -> Result<Utility, CliError> {
    let file: UtilityFile = parse(text, "utility file")?;
    let space = build_space(&file.variables)?;
    match file.utility {
        UtilitySpec::Dense { order, values } => {
            let order = indices(&space, &order)?;
            if order.len() != space.len() {
                return Err(CliError::Input(
                    "dense utility `order` must list every variable exactly once".into(),
                ));
            }
            space.check_dense(force)?;
            let (_, values) = reorder_to_canonical(&space, &order, &values)?;
            Ok(Utility::Dense(UtilityTable::new_unguarded(space, values)?))
        }
        UtilitySpec::Factored { factors } => {
            let factors = factors
                .into_iter()
                .map(|f| {
                    let order = indices(&space, &f.scope)?;
                    let (scope, values) = reorder_to_canonical(&space, &order, &f.values)?;
                    Ok(UtilityFactor::new(scope, values))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Utility::Factored(AdditiveDecomposition::new(
                space, factors,
            )?))
        }
    }
}

pub fn parse_bayes_net(text: &str) -> Result<BayesNet, CliError> {
    let file: BayesNetFile = parse(text, "Bayesian network file")?;
    let space = build_space(&file.variables)?;
    let cpts = file
        .cpts
        .iter()
        .map(|c| {
            let child = indices(&space, std::slice::from_ref(&c.child))?[0];
            let parents = indices(&space, &c.parents)?;
            if parents.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Input(format!(
                    "parents of `{}` must be distinct and listed in variable order",
                    c.child
                )));
            }
            Ok(Cpt::new(child, Scope::new(parents), c.table.clone()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(BayesNet::new(space, cpts)?)
}

pub fn parse_distribution(
    text: &str,
    space: &VariableSpace,
) -> Result<ExplicitDistribution, CliError> {
    let file: DistributionFile = parse(text, "distribution file")?;
    let order = indices(space, &file.order)?;
    if order.len() != space.len() {
        return Err(CliError::Input(
            "distribution `order` must list every variable exactly once".into(),
        ));
    }
    space.check_dense(false)?;
    let (_, probs) = reorder_to_canonical(space, &order, &file.probs)?;
    Ok(ExplicitDistribution::new(space.clone(), probs)?)
}

/// Bayesian network or explicit distribution, told apart by their keys.
pub fn parse_probability_model(
    text: &str,
    space: &VariableSpace,
) -> Result<ProbabilityModel, CliError> {
    let value: serde_json::Value = parse(text, "probability file")?;
    if value.get("cpts").is_some() {
        Ok(ProbabilityModel::Network(parse_bayes_net(text)?))
    } else {
        Ok(ProbabilityModel::Explicit(parse_distribution(text, space)?))
    }
}

/// `name -> label` pairs as an assignment.
pub fn assignment_from_labels(
    space: &VariableSpace,
    pairs: &BTreeMap<String, String>,
) -> Result<Assignment, CliError> {
    let pairs: Vec<(&str, &str)> = pairs
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();
    Ok(space.assignment(&pairs)?)
}

pub fn parse_actions(text: &str, space: &VariableSpace) -> Result<ActionSet, CliError> {
    let file: ActionsFile = parse(text, "actions file")?;
    let actions = file
        .actions
        .iter()
        .map(|a| {
            Ok(Action {
                label: a.label.clone(),
                evidence: assignment_from_labels(space, &a.evidence)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ActionSet::new(space, actions)?)
}

pub fn names(space: &VariableSpace, scope: &Scope) -> Vec<String> {
    space.names(scope).into_iter().map(str::to_string).collect()
}

/// Factored utility file for a decomposition, factor scopes in variable order.
pub fn factored_file(d: &AdditiveDecomposition) -> UtilityFile {
    UtilityFile {
        variables: space_specs(d.space()),
        utility: UtilitySpec::Factored {
            factors: d
                .factors()
                .iter()
                .map(|f| FactorSpec {
                    scope: names(d.space(), &f.scope),
                    values: f.values.clone(),
                })
                .collect(),
        },
    }
}

pub fn dense_file(u: &UtilityTable) -> UtilityFile {
    let space = u.space();
    UtilityFile {
        variables: space_specs(space),
        utility: UtilitySpec::Dense {
            order: names(space, &space.full_scope()),
            values: u.values().to_vec(),
        },
    }
}
