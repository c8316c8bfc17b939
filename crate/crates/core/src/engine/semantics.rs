//! Shared semantic definitions: metavariable bindings and the condition-fact
//! algebra. Both the production matcher and the brute-force oracle build on
//! these; the search strategies on top are implemented twice, independently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::minic::{AstUnit, EdgeKind, NodeId, NodeKind, SourcePos};
use crate::patlang::term::{MetavarKind, Term};

// ---------------------------------------------------------------------------
// Bindings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundValue {
    /// Expression/statement/parameter value as a concrete term snapshot.
    Term(Term),
    Ident(String),
    TypeText(String),
    Pos(SourcePos),
}

impl BoundValue {
    pub fn render(&self) -> String {
        match self {
            BoundValue::Term(t) => crate::patlang::term::render_term(t),
            BoundValue::Ident(s) | BoundValue::TypeText(s) => s.clone(),
            BoundValue::Pos(p) => format!("{}:{}:{}", p.file, p.line, p.col),
        }
    }
}

/// Map from metavariable name to its bound value. A metavariable binds at
/// most one value per match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    map: BTreeMap<String, BoundValue>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn get(&self, name: &str) -> Option<&BoundValue> {
        self.map.get(name)
    }

    /// Extend with one binding; `None` when it conflicts with an existing
    /// value (consistency along the control-flow path).
    pub fn bind(&self, name: &str, value: BoundValue) -> Option<Binding> {
        match self.map.get(name) {
            Some(old) if *old != value => None,
            Some(_) => Some(self.clone()),
            None => {
                let mut next = self.clone();
                next.map.insert(name.to_string(), value);
                Some(next)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BoundValue)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Stable one-line rendering, used in digests and reports.
    pub fn render(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k}->{}", v.render()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// The value category a metavariable kind accepts from an AST node.
pub fn value_of_node(unit: &AstUnit, node: NodeId, kind: MetavarKind) -> Option<BoundValue> {
    let n = unit.node(node);
    match kind {
        MetavarKind::Identifier => {
            (n.kind == NodeKind::Identifier).then(|| BoundValue::Ident(n.label.clone()))
        }
        MetavarKind::Constant => {
            (n.kind == NodeKind::Literal).then(|| BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Expression => {
            n.kind.is_expr().then(|| BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Statement => {
            n.kind.is_stmt().then(|| BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Parameter => {
            (n.kind == NodeKind::Param).then(|| BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Type => matches!(n.kind, NodeKind::TypeName | NodeKind::PointerType)
            .then(|| BoundValue::TypeText(type_text(unit, node))),
        MetavarKind::Position => None,
    }
}

/// Canonical text of a type node (`struct person`, `char *`).
pub fn type_text(unit: &AstUnit, node: NodeId) -> String {
    let n = unit.node(node);
    match n.kind {
        NodeKind::PointerType => format!("{} *", type_text(unit, n.children[0])),
        _ => n.label.clone(),
    }
}

// ---------------------------------------------------------------------------
// Condition facts
// ---------------------------------------------------------------------------

/// A fact asserted by traversing a condition node along one edge, expressed
/// as a term over the program's own syntax.
pub type Fact = Term;

fn negate_atom(unit: &AstUnit, e: NodeId) -> Fact {
    let n = unit.node(e);
    if n.kind == NodeKind::BinaryExpr {
        let flipped = match n.label.as_str() {
            "==" => Some("!="),
            "!=" => Some("=="),
            "<" => Some(">="),
            "<=" => Some(">"),
            ">" => Some("<="),
            ">=" => Some("<"),
            _ => None,
        };
        if let Some(op) = flipped {
            return Term::node(
                NodeKind::BinaryExpr,
                op,
                vec![
                    Term::from_ast(unit, n.children[0]),
                    Term::from_ast(unit, n.children[1]),
                ],
            );
        }
    }
    Term::node(NodeKind::UnaryExpr, "!", vec![Term::from_ast(unit, e)])
}

/// Definite facts asserted by a condition when the given edge is taken.
///
/// The true edge of `a && b` asserts both conjuncts; the false edge of
/// `a || b` asserts both negated disjuncts; `!e` swaps polarity; negating a
/// comparison flips its operator. A negated conjunction (or any compound the
/// algebra cannot decompose) yields a single opaque fact, which no simple
/// `when` term can equal.
pub fn condition_facts(unit: &AstUnit, cond: NodeId, edge: EdgeKind) -> Vec<Fact> {
    let n = unit.node(cond);
    match edge {
        EdgeKind::True => {
            if n.kind == NodeKind::BinaryExpr && n.label == "&&" {
                let mut out = condition_facts(unit, n.children[0], EdgeKind::True);
                out.extend(condition_facts(unit, n.children[1], EdgeKind::True));
                out
            } else if n.kind == NodeKind::UnaryExpr && n.label == "!" {
                condition_facts(unit, n.children[0], EdgeKind::False)
            } else {
                vec![Term::from_ast(unit, cond)]
            }
        }
        EdgeKind::False => {
            if n.kind == NodeKind::BinaryExpr && n.label == "||" {
                let mut out = condition_facts(unit, n.children[0], EdgeKind::False);
                out.extend(condition_facts(unit, n.children[1], EdgeKind::False));
                out
            } else if n.kind == NodeKind::UnaryExpr && n.label == "!" {
                condition_facts(unit, n.children[0], EdgeKind::True)
            } else {
                vec![negate_atom(unit, cond)]
            }
        }
        EdgeKind::Seq => Vec::new(),
    }
}
