//! Brute-force reference matcher.
//!
//! Implements the same matching semantics as `matching.rs` but with its own
//! exhaustive search and its own term/clause matching code, so the two can
//! check each other. Only the definitional pieces are shared: path
//! enumeration, the condition-fact algebra, binding consistency, element
//! flattening and the final overlap filter.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::minic::cfg::{CfgNodeKind, PathBudget};
use crate::minic::{build_cfg, enumerate_paths, AstUnit, Cfg, CfgPath, EdgeKind, NodeId, NodeKind};
use crate::patlang::term::{MetavarKind, Term, TermNode};
use crate::patlang::{GenericPatchRule, Quantifier, WhenClause};

use super::matching::{flatten_items, resolve_elements, Embedding, MItem};
use super::semantics::{condition_facts, type_text, Binding, BoundValue};
use super::{resolve_overlaps, MatchSite, ResolvedElem};

/// Hard cap on explored embedding states.
const MAX_CANDIDATES: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Naive term matching (written independently of matching.rs)
// ---------------------------------------------------------------------------

fn accepts(unit: &AstUnit, node: NodeId, kind: MetavarKind) -> Option<BoundValue> {
    let k = unit.node(node).kind;
    match kind {
        MetavarKind::Identifier if k == NodeKind::Identifier => {
            Some(BoundValue::Ident(unit.node(node).label.clone()))
        }
        MetavarKind::Constant if k == NodeKind::Literal => {
            Some(BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Expression if k.is_expr() => Some(BoundValue::Term(Term::from_ast(unit, node))),
        MetavarKind::Statement if k.is_stmt() => Some(BoundValue::Term(Term::from_ast(unit, node))),
        MetavarKind::Parameter if k == NodeKind::Param => {
            Some(BoundValue::Term(Term::from_ast(unit, node)))
        }
        MetavarKind::Type if matches!(k, NodeKind::TypeName | NodeKind::PointerType) => {
            Some(BoundValue::TypeText(type_text(unit, node)))
        }
        _ => None,
    }
}

fn naive_match(unit: &AstUnit, term: &Term, node: NodeId, binding: &Binding) -> Vec<Binding> {
    let mut out = Vec::new();
    match &term.node {
        TermNode::Metavar { name, kind } => {
            if let Some(v) = accepts(unit, node, *kind) {
                if let Some(b) = binding.bind(name, v) {
                    out.push(b);
                }
            }
        }
        TermNode::Node { kind, label, children } => {
            let n = unit.node(node);
            if n.kind == *kind && n.label == *label && n.children.len() == children.len() {
                let mut frontier = vec![binding.clone()];
                for (i, ct) in children.iter().enumerate() {
                    let mut next = Vec::new();
                    for b in frontier {
                        next.extend(naive_match(unit, ct, n.children[i], &b));
                    }
                    frontier = next;
                }
                out = frontier;
            }
        }
    }
    if let Some(p) = &term.pos_var {
        let pos = unit.node_pos(node);
        out.retain(|b| b.get(p).map(|v| *v == BoundValue::Pos(pos.clone())).unwrap_or(true));
        out = out
            .into_iter()
            .filter_map(|b| b.bind(p, BoundValue::Pos(pos.clone())))
            .collect();
    }
    out
}

fn all_subnodes(unit: &AstUnit, root: NodeId) -> Vec<NodeId> {
    unit.descendants(root)
}

// term-vs-term matching for clause checks, written recursively with explicit
// candidate narrowing
fn term_value_accepts(value: &Term, kind: MetavarKind) -> Option<BoundValue> {
    match &value.node {
        TermNode::Node { kind: vk, label, .. } => match kind {
            MetavarKind::Identifier if *vk == NodeKind::Identifier => {
                Some(BoundValue::Ident(label.clone()))
            }
            MetavarKind::Constant if *vk == NodeKind::Literal => Some(BoundValue::Term(value.clone())),
            MetavarKind::Expression if vk.is_expr() => Some(BoundValue::Term(value.clone())),
            MetavarKind::Statement if vk.is_stmt() => Some(BoundValue::Term(value.clone())),
            _ => None,
        },
        TermNode::Metavar { .. } => None,
    }
}

fn naive_term_vs_term(pattern: &Term, value: &Term, binding: &Binding) -> Vec<Binding> {
    match &pattern.node {
        TermNode::Metavar { name, kind } => match term_value_accepts(value, *kind) {
            Some(v) => binding.bind(name, v).into_iter().collect(),
            None => Vec::new(),
        },
        TermNode::Node { kind, label, children } => {
            let (vk, vl, vc) = match &value.node {
                TermNode::Node { kind, label, children } => (kind, label, children),
                TermNode::Metavar { .. } => return Vec::new(),
            };
            if vk != kind || vl != label || vc.len() != children.len() {
                return Vec::new();
            }
            let mut frontier = vec![binding.clone()];
            for (p, v) in children.iter().zip(vc.iter()) {
                let mut next = Vec::new();
                for b in frontier {
                    next.extend(naive_term_vs_term(p, v, &b));
                }
                frontier = next;
            }
            frontier
        }
    }
}

fn subterms_of(t: &Term) -> Vec<&Term> {
    let mut out = vec![t];
    match &t.node {
        TermNode::Node { children, .. } => {
            for c in children {
                out.extend(subterms_of(c));
            }
        }
        TermNode::Metavar { .. } => {}
    }
    out
}

fn clause_hits_step(
    unit: &AstUnit,
    cfg: &Cfg,
    node: usize,
    edge: EdgeKind,
    clause: &Term,
    binding: &Binding,
) -> bool {
    match cfg.nodes[node].kind {
        CfgNodeKind::Stmt(stmt) => {
            let snap = Term::from_ast(unit, stmt);
            subterms_of(&snap)
                .iter()
                .any(|s| !naive_term_vs_term(clause, s, binding).is_empty())
        }
        CfgNodeKind::Cond { expr, .. } => condition_facts(unit, expr, edge)
            .iter()
            .any(|f| !naive_term_vs_term(clause, f, binding).is_empty()),
        _ => false,
    }
}

fn segment_ok(
    unit: &AstUnit,
    cfg: &Cfg,
    path: &CfgPath,
    from: usize,
    to: usize,
    clauses: &[WhenClause],
    binding: &Binding,
) -> bool {
    if clauses.iter().any(|c| matches!(c, WhenClause::Any)) {
        return true;
    }
    // re-scan the whole segment against every clause
    for i in from..to {
        let edge = path.edges.get(i).copied().unwrap_or(EdgeKind::Seq);
        for c in clauses {
            if let WhenClause::NotMatch(t) = c {
                if clause_hits_step(unit, cfg, path.nodes[i], edge, t, binding) {
                    return false;
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Exhaustive embedding search
// ---------------------------------------------------------------------------

struct Search<'a> {
    unit: &'a AstUnit,
    cfg: &'a Cfg,
    path: &'a CfgPath,
    states: &'a mut usize,
}

impl<'a> Search<'a> {
    fn interior_end(&self) -> usize {
        self.path.nodes.len() - 1
    }

    fn stmt_span_end(&self, stmt: NodeId, mut i: usize) -> usize {
        while i < self.interior_end() {
            let inside = self
                .cfg
                .owner_stmt(self.path.nodes[i])
                .map(|a| self.unit.contains(stmt, a))
                .unwrap_or(false);
            if inside {
                i += 1;
            } else {
                break;
            }
        }
        i
    }

    fn explore(
        &mut self,
        items: &[MItem],
        j: usize,
        i: usize,
        emb: Embedding,
        out: &mut Vec<Embedding>,
    ) -> Result<()> {
        *self.states += 1;
        if *self.states > MAX_CANDIDATES {
            return Err(Error::PathBudget {
                function: "brute_force_match".into(),
            });
        }
        if j == items.len() {
            if i == self.interior_end() {
                out.push(emb);
            }
            return Ok(());
        }
        match &items[j] {
            MItem::Dots { clauses, .. } => {
                for end in i..=self.interior_end() {
                    if segment_ok(self.unit, self.cfg, self.path, i, end, clauses, &emb.binding) {
                        self.explore(items, j + 1, end, emb.clone(), out)?;
                    }
                }
                Ok(())
            }
            MItem::Anchor { term, minus, src } => {
                if i >= self.interior_end() {
                    return Ok(());
                }
                let cfg_node = self.path.nodes[i];
                if term.is_statement() {
                    let Some(owner) = self.cfg.owner_stmt(cfg_node) else {
                        return Ok(());
                    };
                    for b in naive_match(self.unit, term, owner, &emb.binding) {
                        let mut e = emb.clone();
                        e.binding = b;
                        e.anchors.push((src.clone(), owner, owner, *minus));
                        let next = self.stmt_span_end(owner, i + 1);
                        self.explore(items, j + 1, next, e, out)?;
                    }
                } else {
                    let scope = match self.cfg.nodes[cfg_node].kind {
                        CfgNodeKind::Stmt(s) => s,
                        CfgNodeKind::Cond { expr, .. } => expr,
                        _ => return Ok(()),
                    };
                    let owner = self.cfg.owner_stmt(cfg_node).unwrap_or(scope);
                    for cand in all_subnodes(self.unit, scope) {
                        for b in naive_match(self.unit, term, cand, &emb.binding) {
                            let mut e = emb.clone();
                            e.binding = b;
                            e.anchors.push((src.clone(), owner, cand, *minus));
                            self.explore(items, j + 1, i + 1, e.clone(), out)?;
                        }
                    }
                }
                Ok(())
            }
            MItem::Disj { branches, src } => {
                for (bi, branch) in branches.iter().enumerate() {
                    let mut combined = branch.clone();
                    combined.extend_from_slice(&items[j + 1..]);
                    let mut sub = Vec::new();
                    let mut e = emb.clone();
                    e.choices.insert(src.clone(), bi);
                    self.explore(&combined, 0, i, e, &mut sub)?;
                    if !sub.is_empty() {
                        out.append(&mut sub);
                        return Ok(());
                    }
                }
                Ok(())
            }
        }
    }
}

fn oracle_header_bindings(
    unit: &AstUnit,
    rule: &GenericPatchRule,
    func: NodeId,
) -> Vec<Binding> {
    // Reuses the structural definition from the production matcher: header
    // templates are data, not search.
    match &rule.header {
        Some(h) => super::matching::match_header(unit, h, func),
        None => vec![Binding::new()],
    }
}

/// Exhaustively enumerate path embeddings and bindings. Agrees with
/// `match_rule` on every input within bounds.
pub fn brute_force_match(
    rule: &GenericPatchRule,
    unit: &AstUnit,
    max_path_len: usize,
) -> Result<Vec<MatchSite>> {
    let has_anchor = rule.elements.iter().any(|e| e.is_anchor())
        || rule
            .elements
            .iter()
            .any(|e| matches!(&e.body, crate::patlang::ElemBody::Disjunction(_)));
    if rule.elements.is_empty() || !has_anchor {
        return Err(Error::DegenerateRule(format!(
            "rule {} has no matchable body",
            rule.name
        )));
    }

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

    let budget = PathBudget {
        max_paths: MAX_CANDIDATES,
        max_len: max_path_len,
    };
    let mut states = 0usize;
    let mut sites = Vec::new();

    for func in unit.functions() {
        let bases = oracle_header_bindings(unit, rule, func);
        if bases.is_empty() {
            continue;
        }
        let cfg = build_cfg(unit, func);
        let paths = enumerate_paths(&cfg, budget).ok_or(Error::PathBudget {
            function: unit.function_name(func).to_string(),
        })?;

        let mut grouped: BTreeMap<String, (Embedding, Vec<usize>)> = BTreeMap::new();
        let mut ok_paths = vec![false; paths.len()];
        for (pi, path) in paths.iter().enumerate() {
            for base in &bases {
                let mut found = Vec::new();
                let mut search = Search {
                    unit,
                    cfg: &cfg,
                    path,
                    states: &mut states,
                };
                let start = Embedding {
                    binding: base.clone(),
                    anchors: Vec::new(),
                    choices: BTreeMap::new(),
                };
                search.explore(&items, 0, 1, start, &mut found)?;
                if !found.is_empty() {
                    ok_paths[pi] = true;
                }
                for emb in found {
                    let key = format!("{}|{:?}|{:?}", emb.binding.render(), emb.anchors, emb.choices);
                    grouped
                        .entry(key)
                        .or_insert_with(|| (emb.clone(), Vec::new()))
                        .1
                        .push(pi);
                }
            }
        }
        if grouped.is_empty() {
            continue;
        }
        if rule.quantifier == Quantifier::Forall && !ok_paths.iter().all(|&p| p) {
            continue;
        }
        for (_, (emb, mut wit)) in grouped {
            wit.sort_unstable();
            wit.dedup();
            if rule.quantifier == Quantifier::Forall {
                wit = (0..paths.len()).collect();
            }
            let mut resolved = Vec::new();
            resolve_elements(&rule.elements, &[], &emb, &mut resolved);
            let anchor_nodes: Vec<NodeId> = resolved
                .iter()
                .filter_map(|r| match r {
                    ResolvedElem::Minus { node, .. } | ResolvedElem::Context { node, .. } => {
                        Some(*node)
                    }
                    _ => None,
                })
                .collect();
            if anchor_nodes.is_empty() {
                continue;
            }
            let span = (
                anchor_nodes.iter().map(|&n| unit.node(n).tok_start).min().unwrap(),
                anchor_nodes.iter().map(|&n| unit.node(n).tok_end).max().unwrap(),
            );
            sites.push(MatchSite {
                rule_name: rule.name.clone(),
                function: func,
                function_name: unit.function_name(func).to_string(),
                anchor_span: span,
                binding: emb.binding.clone(),
                witness_paths: wit,
                resolved,
            });
        }
    }

    Ok(resolve_overlaps(sites))
}
