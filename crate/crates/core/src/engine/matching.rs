//! The production control-flow matcher.
//!
//! Semantics (shared with the brute-force oracle in `oracle.rs`):
//!
//! - A rule body is a sequence of items matched left-to-right along one
//!   Entry-to-Exit CFG path (paths are bounded: each back edge at most once).
//! - A statement-shaped term consumes the owning statement of the current
//!   node (a condition node stands for its whole `if`/`while`/`for`) plus
//!   every following path node inside that statement's span. An
//!   expression-shaped term consumes one node and must match some subterm of
//!   it (a condition node exposes only its condition expression).
//! - `...` consumes any run of nodes, each of which must fail every
//!   `when !=` clause under the binding accumulated so far; metavariables
//!   not yet bound act as wildcards inside clauses, and `when any` clears
//!   the constraints. A plain statement node is checked against the clause
//!   term and all its subterms; a condition node is checked against the
//!   definite facts asserted by the traversed edge (`condition_facts`).
//! - Disjunctions try branches left to right; the first branch that can
//!   match at the current state wins.
//! - A rule with a function-header template must cover the whole path; a
//!   headerless rule gets implicit unconstrained `...` at both ends.
//! - `exists` keeps every embedding found on any path; `forall` requires
//!   every complete path to admit at least one embedding, and returns the
//!   same site set when it holds (none otherwise).
//! - Overlapping sites resolve to the earliest in source order.

use std::collections::BTreeMap;

use crate::minic::cfg::{Cfg, CfgNodeKind};
use crate::minic::{AstUnit, CfgPath, EdgeKind, NodeId, NodeKind};
use crate::patlang::term::{MetavarKind, Term, TermNode};
use crate::patlang::{ElemBody, GenericPatchRule, HeaderPattern, ParamPattern, PatternElem, PlusTerm, Slot, WhenClause};

use super::semantics::{condition_facts, value_of_node, Binding, BoundValue};

// ---------------------------------------------------------------------------
// Term matching against the AST
// ---------------------------------------------------------------------------

/// All bindings under which `term` matches exactly the subtree at `node`.
pub fn match_term_ast(unit: &AstUnit, term: &Term, node: NodeId, binding: &Binding) -> Vec<Binding> {
    let mut results = match &term.node {
        TermNode::Metavar { name, kind } => match value_of_node(unit, node, *kind) {
            Some(v) => binding.bind(name, v).into_iter().collect(),
            None => Vec::new(),
        },
        TermNode::Node { kind, label, children } => {
            let n = unit.node(node);
            if n.kind != *kind || n.label != *label || n.children.len() != children.len() {
                return Vec::new();
            }
            let mut acc = vec![binding.clone()];
            for (ct, &cn) in children.iter().zip(n.children.iter()) {
                let mut next = Vec::new();
                for b in &acc {
                    next.extend(match_term_ast(unit, ct, cn, b));
                }
                if next.is_empty() {
                    return Vec::new();
                }
                acc = next;
            }
            acc
        }
    };
    if let Some(p) = &term.pos_var {
        let pos = unit.node_pos(node);
        results = results
            .into_iter()
            .filter_map(|b| b.bind(p, BoundValue::Pos(pos.clone())))
            .collect();
    }
    results
}

/// All (subterm node, binding) pairs where `term` matches inside `root`,
/// in source order.
pub fn match_term_within(
    unit: &AstUnit,
    term: &Term,
    root: NodeId,
    binding: &Binding,
) -> Vec<(NodeId, Binding)> {
    let mut out = Vec::new();
    for d in unit.descendants(root) {
        for b in match_term_ast(unit, term, d, binding) {
            out.push((d, b));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Term matching against fact terms (for when-clauses)
// ---------------------------------------------------------------------------

fn term_children(t: &Term) -> &[Term] {
    match &t.node {
        TermNode::Node { children, .. } => children,
        TermNode::Metavar { .. } => &[],
    }
}

fn value_of_term(t: &Term, kind: MetavarKind) -> Option<BoundValue> {
    match (&t.node, kind) {
        (TermNode::Node { kind: NodeKind::Identifier, label, .. }, MetavarKind::Identifier) => {
            Some(BoundValue::Ident(label.clone()))
        }
        (TermNode::Node { kind: k, .. }, MetavarKind::Expression) if k.is_expr() => {
            Some(BoundValue::Term(t.clone()))
        }
        (TermNode::Node { kind: NodeKind::Literal, .. }, MetavarKind::Constant) => {
            Some(BoundValue::Term(t.clone()))
        }
        (TermNode::Node { kind: k, .. }, MetavarKind::Statement) if k.is_stmt() => {
            Some(BoundValue::Term(t.clone()))
        }
        _ => None,
    }
}

/// Does `pattern` match the concrete term `value` under `binding`?
/// Metavariables unbound in `binding` are wildcards; nothing is persisted.
pub fn term_matches_term(pattern: &Term, value: &Term, binding: &Binding) -> bool {
    fn go(pattern: &Term, value: &Term, binding: &Binding) -> Vec<Binding> {
        match &pattern.node {
            TermNode::Metavar { name, kind } => match value_of_term(value, *kind) {
                Some(v) => binding.bind(name, v).into_iter().collect(),
                None => Vec::new(),
            },
            TermNode::Node { kind, label, children } => match &value.node {
                TermNode::Node { kind: vk, label: vl, children: vc }
                    if vk == kind && vl == label && vc.len() == children.len() =>
                {
                    let mut acc = vec![binding.clone()];
                    for (p, v) in children.iter().zip(vc.iter()) {
                        let mut next = Vec::new();
                        for b in &acc {
                            next.extend(go(p, v, b));
                        }
                        if next.is_empty() {
                            return Vec::new();
                        }
                        acc = next;
                    }
                    acc
                }
                _ => Vec::new(),
            },
        }
    }
    !go(pattern, value, binding).is_empty()
}

fn term_subterms(t: &Term) -> Vec<&Term> {
    let mut out = vec![t];
    let mut i = 0;
    while i < out.len() {
        for c in term_children(out[i]) {
            out.push(c);
        }
        i += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// When-clause checks
// ---------------------------------------------------------------------------

/// Does a path step violate a `when != t` clause? For plain statements the
/// clause may match the whole statement or any subterm; for conditions it
/// must equal one of the facts asserted by the traversed edge.
pub fn step_violates(
    unit: &AstUnit,
    cfg: &Cfg,
    node: usize,
    out_edge: EdgeKind,
    clause: &Term,
    binding: &Binding,
) -> bool {
    match cfg.nodes[node].kind {
        CfgNodeKind::Stmt(stmt) => {
            let snapshot = Term::from_ast(unit, stmt);
            term_subterms(&snapshot)
                .into_iter()
                .any(|sub| term_matches_term(clause, sub, binding))
        }
        CfgNodeKind::Cond { expr, .. } => condition_facts(unit, expr, out_edge)
            .iter()
            .any(|fact| term_matches_term(clause, fact, binding)),
        _ => false,
    }
}

fn dots_admits(
    unit: &AstUnit,
    cfg: &Cfg,
    clauses: &[WhenClause],
    node: usize,
    out_edge: EdgeKind,
    binding: &Binding,
) -> bool {
    if clauses.iter().any(|c| matches!(c, WhenClause::Any)) {
        return true;
    }
    for c in clauses {
        if let WhenClause::NotMatch(t) = c {
            if step_violates(unit, cfg, node, out_edge, t, binding) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Flattened match items
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum MItem {
    Dots { clauses: Vec<WhenClause>, src: Vec<usize> },
    Anchor { term: Term, minus: bool, src: Vec<usize> },
    Disj { branches: Vec<Vec<MItem>>, src: Vec<usize> },
}

pub fn flatten_items(elems: &[PatternElem], prefix: &[usize]) -> Vec<MItem> {
    let mut out = Vec::new();
    for (i, e) in elems.iter().enumerate() {
        let mut src = prefix.to_vec();
        src.push(i);
        match &e.body {
            ElemBody::Context(t) => out.push(MItem::Anchor {
                term: t.clone(),
                minus: false,
                src,
            }),
            ElemBody::Minus(t) => out.push(MItem::Anchor {
                term: t.clone(),
                minus: true,
                src,
            }),
            ElemBody::Dots(c) => out.push(MItem::Dots {
                clauses: c.clone(),
                src,
            }),
            ElemBody::Plus(_) => {}
            ElemBody::Disjunction(branches) => out.push(MItem::Disj {
                branches: branches
                    .iter()
                    .enumerate()
                    .map(|(bi, b)| {
                        let mut p = src.clone();
                        p.push(bi);
                        flatten_items(b, &p)
                    })
                    .collect(),
                src,
            }),
        }
    }
    out
}

/// One successful body embedding on one path.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub binding: Binding,
    /// (element index path, owner statement, matched node, is_minus)
    pub anchors: Vec<(Vec<usize>, NodeId, NodeId, bool)>,
    /// disjunction element -> chosen branch
    pub choices: BTreeMap<Vec<usize>, usize>,
}

/// `nodes[i]`'s outgoing edge along the path.
fn out_edge(path: &CfgPath, i: usize) -> EdgeKind {
    path.edges.get(i).copied().unwrap_or(EdgeKind::Seq)
}

struct PathMatcher<'a> {
    unit: &'a AstUnit,
    cfg: &'a Cfg,
    path: &'a CfgPath,
}

impl<'a> PathMatcher<'a> {
    /// Interior path positions are `1..path.nodes.len()-1` (Entry and Exit
    /// excluded).
    fn run(&self, items: &[MItem], base: &Binding) -> Vec<Embedding> {
        let mut out = Vec::new();
        let start = Embedding {
            binding: base.clone(),
            anchors: Vec::new(),
            choices: BTreeMap::new(),
        };
        self.step(items, 0, 1, &start, &mut out);
        out
    }

    fn end_pos(&self) -> usize {
        self.path.nodes.len() - 1
    }

    /// Nodes of the path strictly inside the statement span of `stmt`,
    /// starting at `from`.
    fn span_end(&self, stmt: NodeId, from: usize) -> usize {
        let mut i = from;
        while i < self.end_pos() {
            match self.cfg.owner_stmt(self.path.nodes[i]) {
                Some(ast) if self.unit.contains(stmt, ast) => i += 1,
                _ => break,
            }
        }
        i
    }

    fn step(&self, items: &[MItem], j: usize, i: usize, emb: &Embedding, out: &mut Vec<Embedding>) {
        if j == items.len() {
            if i == self.end_pos() {
                out.push(emb.clone());
            }
            return;
        }
        match &items[j] {
            MItem::Dots { clauses, .. } => {
                // consume 0..k admissible nodes
                let mut k = i;
                loop {
                    self.step(items, j + 1, k, emb, out);
                    if k >= self.end_pos() {
                        break;
                    }
                    let node = self.path.nodes[k];
                    if !dots_admits(self.unit, self.cfg, clauses, node, out_edge(self.path, k), &emb.binding) {
                        break;
                    }
                    k += 1;
                }
            }
            MItem::Anchor { term, minus, src } => {
                if i >= self.end_pos() {
                    return;
                }
                let cfg_node = self.path.nodes[i];
                if term.is_statement() {
                    let Some(owner) = self.cfg.owner_stmt(cfg_node) else { return };
                    // A condition node stands for its whole statement; a
                    // plain node for itself.
                    for b in match_term_ast(self.unit, term, owner, &emb.binding) {
                        let next_i = self.span_end(owner, i + 1);
                        let mut e = emb.clone();
                        e.binding = b;
                        e.anchors.push((src.clone(), owner, owner, *minus));
                        self.step(items, j + 1, next_i, &e, out);
                    }
                } else {
                    let scope = match self.cfg.nodes[cfg_node].kind {
                        CfgNodeKind::Stmt(s) => s,
                        CfgNodeKind::Cond { expr, .. } => expr,
                        _ => return,
                    };
                    let owner = self.cfg.owner_stmt(cfg_node).unwrap_or(scope);
                    for (node, b) in match_term_within(self.unit, term, scope, &emb.binding) {
                        let mut e = emb.clone();
                        e.binding = b;
                        e.anchors.push((src.clone(), owner, node, *minus));
                        self.step(items, j + 1, i + 1, &e, out);
                    }
                }
            }
            MItem::Disj { branches, src } => {
                for (bi, branch) in branches.iter().enumerate() {
                    let mut sub = Vec::new();
                    let mut probe = emb.clone();
                    probe.choices.insert(src.clone(), bi);
                    // splice branch items before the remaining items
                    let mut combined: Vec<MItem> = branch.clone();
                    combined.extend_from_slice(&items[j + 1..]);
                    self.step(&combined, 0, i, &probe, &mut sub);
                    if !sub.is_empty() {
                        out.extend(sub);
                        return; // first matching branch wins
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Header matching
// ---------------------------------------------------------------------------

fn type_parts(unit: &AstUnit, ty: NodeId) -> (usize, NodeId) {
    let n = unit.node(ty);
    if n.kind == NodeKind::PointerType {
        let (stars, inner) = type_parts(unit, n.children[0]);
        (stars + 1, inner)
    } else {
        (0, ty)
    }
}

fn match_params(
    unit: &AstUnit,
    pats: &[ParamPattern],
    params: &[NodeId],
    binding: &Binding,
    out: &mut Vec<Binding>,
) {
    match pats.first() {
        None => {
            if params.is_empty() {
                out.push(binding.clone());
            }
        }
        Some(ParamPattern::Dots) => {
            for skip in 0..=params.len() {
                match_params(unit, &pats[1..], &params[skip..], binding, out);
            }
        }
        Some(ParamPattern::Whole(name)) => {
            if let Some(&p) = params.first() {
                if let Some(v) = value_of_node(unit, p, MetavarKind::Parameter) {
                    if let Some(b) = binding.bind(name, v) {
                        match_params(unit, &pats[1..], &params[1..], &b, out);
                    }
                }
            }
        }
        Some(ParamPattern::Decl { ty, stars, name }) => {
            let Some(&p) = params.first() else { return };
            let children = unit.children(p);
            if children.len() != 2 {
                return;
            }
            let (got_stars, base) = type_parts(unit, children[0]);
            if got_stars != *stars {
                return;
            }
            let declarator = children[1];
            if unit.node(declarator).kind != NodeKind::Identifier {
                return;
            }
            let b = binding.clone();
            let b = match ty {
                Slot::Metavar(n) => {
                    match b.bind(n, BoundValue::TypeText(unit.node(base).label.clone())) {
                        Some(b) => b,
                        None => return,
                    }
                }
                Slot::Concrete(s) => {
                    if unit.node(base).label != *s {
                        return;
                    }
                    b
                }
            };
            let b = match name {
                Slot::Metavar(n) => {
                    match b.bind(n, BoundValue::Ident(unit.node(declarator).label.clone())) {
                        Some(b) => b,
                        None => return,
                    }
                }
                Slot::Concrete(s) => {
                    if unit.node(declarator).label != *s {
                        return;
                    }
                    b
                }
            };
            match_params(unit, &pats[1..], &params[1..], &b, out);
        }
    }
}

/// Bindings under which the header template matches a function definition.
pub fn match_header(unit: &AstUnit, header: &HeaderPattern, func: NodeId) -> Vec<Binding> {
    let f = unit.node(func);
    let name_node = f.children[1];
    let binding = Binding::new();
    let binding = match &header.name {
        Slot::Metavar(n) => {
            match binding.bind(n, BoundValue::Ident(unit.node(name_node).label.clone())) {
                Some(b) => b,
                None => return Vec::new(),
            }
        }
        Slot::Concrete(s) => {
            if unit.node(name_node).label != *s {
                return Vec::new();
            }
            binding
        }
    };
    let params = unit.children(f.children[2]).to_vec();
    let mut out = Vec::new();
    match_params(unit, &header.params, &params, &binding, &mut out);
    out
}

/// Items for a rule body: headerless rules float anywhere along a path.
pub fn rule_items(rule: &GenericPatchRule) -> Vec<MItem> {
    let mut items = flatten_items(&rule.elements, &[]);
    if rule.header.is_none() {
        if !matches!(items.first(), Some(MItem::Dots { .. })) {
            items.insert(
                0,
                MItem::Dots {
                    clauses: Vec::new(),
                    src: vec![usize::MAX],
                },
            );
        }
        if !matches!(items.last(), Some(MItem::Dots { .. })) {
            items.push(MItem::Dots {
                clauses: Vec::new(),
                src: vec![usize::MAX - 1],
            });
        }
    }
    items
}

/// All embeddings of a rule body along one path.
pub fn embed_on_path(
    unit: &AstUnit,
    cfg: &Cfg,
    path: &CfgPath,
    items: &[MItem],
    base: &Binding,
) -> Vec<Embedding> {
    PathMatcher { unit, cfg, path }.run(items, base)
}

// ---------------------------------------------------------------------------
// Resolved elements (for application)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolvedElem {
    Context { stmt: NodeId, node: NodeId },
    Minus { stmt: NodeId, node: NodeId },
    Plus(PlusTerm),
    Dots,
}

/// Inline the chosen disjunction branches and attach matched nodes, yielding
/// the element sequence the applier walks.
pub fn resolve_elements(
    elems: &[PatternElem],
    prefix: &[usize],
    emb: &Embedding,
    out: &mut Vec<ResolvedElem>,
) {
    for (i, e) in elems.iter().enumerate() {
        let mut src = prefix.to_vec();
        src.push(i);
        match &e.body {
            ElemBody::Plus(p) => out.push(ResolvedElem::Plus(p.clone())),
            ElemBody::Dots(_) => out.push(ResolvedElem::Dots),
            ElemBody::Context(_) | ElemBody::Minus(_) => {
                let hit = emb.anchors.iter().find(|(s, _, _, _)| *s == src);
                if let Some((_, stmt, node, minus)) = hit {
                    if *minus {
                        out.push(ResolvedElem::Minus {
                            stmt: *stmt,
                            node: *node,
                        });
                    } else {
                        out.push(ResolvedElem::Context {
                            stmt: *stmt,
                            node: *node,
                        });
                    }
                }
            }
            ElemBody::Disjunction(branches) => {
                if let Some(&bi) = emb.choices.get(&src) {
                    let mut p = src.clone();
                    p.push(bi);
                    resolve_elements(&branches[bi], &p, emb, out);
                }
            }
        }
    }
}
