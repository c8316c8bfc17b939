//! Metavariable substitution over pattern terms.

use std::collections::HashMap;

use super::term::{Term, TermNode};

/// Replace every occurrence of the named metavariables by the mapped terms.
/// Position annotations are dropped from the result (they describe match
/// locations, not generated code).
pub fn substitute(t: &Term, values: &HashMap<String, Term>) -> Term {
    let mut out = match &t.node {
        TermNode::Metavar { name, .. } => match values.get(name) {
            Some(v) => v.clone(),
            None => t.clone(),
        },
        TermNode::Node { kind, label, children } => Term::node(
            *kind,
            label.clone(),
            children.iter().map(|c| substitute(c, values)).collect(),
        ),
    };
    out.pos_var = None;
    out
}

/// Single-variable convenience used by tests.
pub fn substitute_simple(t: &Term, name: &str, value: &Term) -> Term {
    let mut m = HashMap::new();
    m.insert(name.to_string(), value.clone());
    substitute(t, &m)
}

/// Names of metavariables still unresolved after substitution.
pub fn unbound_metavars(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(t: &Term, out: &mut Vec<String>) {
        match &t.node {
            TermNode::Metavar { name, .. } => out.push(name.clone()),
            TermNode::Node { children, .. } => {
                for c in children {
                    walk(c, out);
                }
            }
        }
    }
    walk(t, &mut out);
    out
}
