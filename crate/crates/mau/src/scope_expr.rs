//! Scope, partition and assignment expressions given on the command line.
//!
//! `"x,y"` is a scope, `"x|y,z"` a list of groups, `"x=a,y=b"` an assignment.
//! Whitespace is ignored.

use mau_core::{Assignment, Scope, VariableSpace};

use crate::error::CliError;

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(',')
        .map(|w| w.chars().filter(|c| !c.is_whitespace()).collect::<String>())
}

fn is_blank(text: &str) -> bool {
    text.chars().all(char::is_whitespace)
}

/// Comma-separated variable names; the empty string is the empty scope.
pub fn parse_scope(text: &str, space: &VariableSpace) -> Result<Scope, CliError> {
    if is_blank(text) {
        return Ok(Scope::empty());
    }
    let mut members = Vec::new();
    for name in words(text) {
        let v = space
            .index_of(&name)
            .ok_or_else(|| CliError::Input(format!("unknown variable `{name}`")))?;
        if members.contains(&v) {
            return Err(CliError::Input(format!("variable `{name}` listed twice")));
        }
        members.push(v);
    }
    Ok(Scope::new(members))
}

/// `|`-separated groups of comma-separated names.
///
/// With `disjoint`, a variable may appear in only one group.
pub fn parse_groups(
    text: &str,
    space: &VariableSpace,
    disjoint: bool,
) -> Result<Vec<Scope>, CliError> {
    let mut groups = Vec::new();
    for part in text.split('|') {
        if is_blank(part) {
            return Err(CliError::Input(format!("empty group in `{text}`")));
        }
        let scope = parse_scope(part, space)?;
        if disjoint && groups.iter().any(|g: &Scope| !g.is_disjoint(&scope)) {
            return Err(CliError::Input(format!("groups of `{text}` overlap")));
        }
        groups.push(scope);
    }
    Ok(groups)
}

/// `name=label` pairs separated by commas.
pub fn parse_assignment(text: &str, space: &VariableSpace) -> Result<Assignment, CliError> {
    if is_blank(text) {
        return Ok(Assignment::new());
    }
    let mut pairs = Vec::new();
    for item in words(text) {
        let (name, label) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected `name=value`, got `{item}`")))?;
        pairs.push((name.to_string(), label.to_string()));
    }
    Ok(space.assignment(&pairs)?)
}
