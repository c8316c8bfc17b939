//! Generic-patch inference from clusters of concrete before/after examples.
//!
//! Pipeline per cluster: deduplicate byte-identical example diffs, recompute
//! each example's tree diff, lift every edit to its enclosing block-level
//! statement, align the changed-statement slots across examples (the shared
//! shape key makes the alignment positional), partition the examples by
//! token compatibility, anti-unify each partition's statements into
//! minus/plus/context templates, join non-adjacent elements with `...`
//! (guarding identifier metavariables against reassignment across the gap),
//! and score every rule by replaying it on its own examples.
//!
//! Token compatibility deliberately keeps call names concrete: examples that
//! share a change shape but call different functions yield distinct rules
//! rather than one rule with an abstracted callee.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cluster::PatchCluster;
use crate::engine::{apply_patchset, MatchConfig};
use crate::error::{Error, Result};
use crate::minic::{parse_unit, AstUnit, NodeId, NodeKind};
use crate::patlang::term::{MetavarDecl, MetavarKind, Term, TermNode};
use crate::patlang::{
    ElemBody, Frequency, GenericPatch, GenericPatchRule, PatchStats, PatternElem, PlusTerm,
    Provenance, Quantifier, WhenClause,
};
use crate::udiff;
use crate::util::normalize_ws;

// ---------------------------------------------------------------------------
// Example pairs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExamplePair {
    pub hunk_id: String,
    pub before: AstUnit,
    pub after: AstUnit,
    /// Unified diff from the before fragment to the after fragment.
    pub expected_diff: String,
}

impl ExamplePair {
    pub fn new(hunk_id: &str, before_text: &str, after_text: &str) -> Self {
        let before = parse_unit(before_text, "before.c");
        let after = parse_unit(after_text, "after.c");
        let expected_diff = udiff::unified_diff(before_text, after_text, "fragment.c", 3);
        ExamplePair {
            hunk_id: hunk_id.to_string(),
            before,
            after,
            expected_diff,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceResult {
    pub patches: Vec<GenericPatch>,
    pub uncovered_examples: Vec<String>,
    pub elapsed_seconds: f64,
    pub timed_out: bool,
}

// ---------------------------------------------------------------------------
// Anti-unification
// ---------------------------------------------------------------------------

/// Syntactic category of a template slot, which decides the metavariable
/// kind introduced when terms disagree there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    /// Expression position; `primary` marks the spine of the statement
    /// (`f(..)` in `x = f(..);`), where a call-name mismatch must split the
    /// partition instead of abstracting.
    Expr { primary: bool },
    Ident,
    Type,
    Stmt,
    Callee,
    Root,
}

#[derive(Debug, Default)]
pub struct Generalizer {
    /// (difference tuple, kind) -> metavariable name
    map: BTreeMap<(Vec<String>, MetavarKind), String>,
    counters: BTreeMap<MetavarKind, usize>,
    pub decls: Vec<MetavarDecl>,
}

fn kind_letter(kind: MetavarKind) -> char {
    match kind {
        MetavarKind::Type => 'T',
        MetavarKind::Identifier => 'I',
        MetavarKind::Expression => 'E',
        MetavarKind::Statement => 'S',
        MetavarKind::Constant => 'C',
        MetavarKind::Parameter => 'P',
        MetavarKind::Position => 'p',
    }
}

impl Generalizer {
    fn fresh(&mut self, tuple: Vec<String>, kind: MetavarKind) -> String {
        if let Some(name) = self.map.get(&(tuple.clone(), kind)) {
            return name.clone();
        }
        let n = self.counters.entry(kind).or_insert(0);
        let name = format!("{}{}", kind_letter(kind), *n);
        *n += 1;
        self.map.insert((tuple, kind), name.clone());
        self.decls.push(MetavarDecl {
            name: name.clone(),
            kind,
        });
        name
    }

    fn abstract_slot(&mut self, terms: &[&Term], slot: Slot) -> Result<Term> {
        let tuple: Vec<String> = terms
            .iter()
            .map(|t| crate::patlang::term::render_term(t))
            .collect();
        let all = |f: fn(&Term) -> bool| terms.iter().all(|t| f(t));
        let kind = match slot {
            Slot::Type => {
                if !all(|t| matches!(t.kind(), Some(NodeKind::TypeName | NodeKind::PointerType))) {
                    return Err(Error::NoGeneralization("type slot holds a non-type".into()));
                }
                MetavarKind::Type
            }
            Slot::Ident => {
                if !all(|t| t.kind() == Some(NodeKind::Identifier)) {
                    return Err(Error::NoGeneralization(
                        "identifier slot holds a non-identifier".into(),
                    ));
                }
                MetavarKind::Identifier
            }
            Slot::Stmt => {
                if !all(|t| t.kind().map(|k| k.is_stmt()).unwrap_or(false)) {
                    return Err(Error::NoGeneralization("statement slot mismatch".into()));
                }
                MetavarKind::Statement
            }
            Slot::Expr { .. } => {
                if all(|t| t.kind() == Some(NodeKind::Literal)) {
                    MetavarKind::Constant
                } else if all(|t| t.kind().map(|k| k.is_expr()).unwrap_or(false)) {
                    MetavarKind::Expression
                } else {
                    return Err(Error::NoGeneralization(
                        "expression slot holds mixed categories".into(),
                    ));
                }
            }
            Slot::Callee => {
                return Err(Error::NoGeneralization("call names stay concrete".into()))
            }
            Slot::Root => {
                return Err(Error::NoGeneralization(
                    "terms disagree at the template root".into(),
                ))
            }
        };
        Ok(Term::metavar(self.fresh(tuple, kind), kind))
    }

    fn child_slot(parent: NodeKind, idx: usize, child: &Term, outer: Slot) -> Slot {
        let primary = matches!(outer, Slot::Root | Slot::Expr { primary: true } | Slot::Stmt);
        match parent {
            NodeKind::CallExpr if idx == 0 => {
                if child.kind() == Some(NodeKind::Identifier) {
                    Slot::Callee
                } else {
                    Slot::Expr { primary: false }
                }
            }
            NodeKind::CallExpr => Slot::Expr { primary: false },
            NodeKind::FieldAccess if idx == 1 => Slot::Ident,
            NodeKind::DeclStmt | NodeKind::Param if idx == 0 => Slot::Type,
            NodeKind::DeclStmt | NodeKind::Param if idx == 1 => Slot::Ident,
            NodeKind::PointerType => Slot::Type,
            NodeKind::IfStmt if idx >= 1 => Slot::Stmt,
            NodeKind::WhileStmt if idx == 1 => Slot::Stmt,
            NodeKind::ForStmt if idx == 3 => Slot::Stmt,
            NodeKind::ForStmt if idx == 0 => {
                if child.kind().map(|k| k.is_stmt()).unwrap_or(false) {
                    Slot::Stmt
                } else {
                    Slot::Expr { primary: false }
                }
            }
            NodeKind::CompoundStmt => Slot::Stmt,
            NodeKind::ExprStmt | NodeKind::ReturnStmt => Slot::Expr { primary },
            NodeKind::AssignExpr if idx == 1 => Slot::Expr { primary },
            _ => Slot::Expr { primary: false },
        }
    }

    fn gen(&mut self, terms: &[&Term], slot: Slot) -> Result<Term> {
        debug_assert!(!terms.is_empty());
        let first = terms[0];
        let same_shape = terms.iter().all(|t| match (&t.node, &first.node) {
            (
                TermNode::Node { kind: ka, label: la, children: ca },
                TermNode::Node { kind: kb, label: lb, children: cb },
            ) => ka == kb && la == lb && ca.len() == cb.len(),
            _ => false,
        });
        if same_shape {
            let (kind, label, arity) = match &first.node {
                TermNode::Node { kind, label, children } => (*kind, label.clone(), children.len()),
                TermNode::Metavar { .. } => unreachable!(),
            };
            let mut children = Vec::with_capacity(arity);
            let mut failed = false;
            for i in 0..arity {
                let slice: Vec<&Term> = terms
                    .iter()
                    .map(|t| match &t.node {
                        TermNode::Node { children, .. } => &children[i],
                        TermNode::Metavar { .. } => unreachable!(),
                    })
                    .collect();
                let child_slot = Self::child_slot(kind, i, slice[0], slot);
                match self.gen(&slice, child_slot) {
                    Ok(t) => children.push(t),
                    Err(_) => {
                        failed = true;
                        break;
                    }
                }
            }
            if !failed {
                return Ok(Term::node(kind, label, children));
            }
        }
        // shapes disagree (or a child could not generalize): abstract here
        self.abstract_slot(terms, slot)
    }
}

/// Least-general anti-unification of one or more terms of one syntactic
/// category. Positions where the terms agree keep the concrete tokens;
/// differences become fresh metavariables, with equal difference tuples
/// reusing one metavariable.
pub fn generalize_terms(terms: &[Term]) -> Result<(Term, Vec<MetavarDecl>)> {
    let mut g = Generalizer::default();
    let refs: Vec<&Term> = terms.iter().collect();
    let tpl = g.gen(&refs, Slot::Root)?;
    Ok((tpl, g.decls))
}

// ---------------------------------------------------------------------------
// Change records: lifted statement slots per example
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    before_stmt: Option<NodeId>,
    after_stmt: Option<NodeId>,
    /// Sort key in before-side token coordinates.
    order: (usize, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EntryShape {
    Modified, // statement exists on both sides
    Removed,
    Inserted,
}

fn entry_shape(e: &Entry) -> EntryShape {
    match (e.before_stmt, e.after_stmt) {
        (Some(_), Some(_)) => EntryShape::Modified,
        (Some(_), None) => EntryShape::Removed,
        (None, Some(_)) => EntryShape::Inserted,
        (None, None) => unreachable!(),
    }
}

fn parent_of(unit: &AstUnit, id: NodeId) -> Option<NodeId> {
    unit.nodes.iter().position(|n| n.children.contains(&id))
}

/// Nearest ancestor (including self) that is a statement sitting in a
/// statement position (block member, branch body, loop body).
fn enclosing_stmt(unit: &AstUnit, node: NodeId) -> Option<NodeId> {
    let mut cur = node;
    loop {
        let parent = parent_of(unit, cur)?;
        let pk = unit.node(parent).kind;
        if unit.node(cur).kind.is_stmt() {
            let idx = unit.children(parent).iter().position(|&c| c == cur).unwrap();
            let in_stmt_position = match pk {
                NodeKind::CompoundStmt | NodeKind::FunctionDef => true,
                NodeKind::IfStmt => idx >= 1,
                NodeKind::WhileStmt => idx == 1,
                NodeKind::ForStmt => idx == 3,
                _ => false,
            };
            if in_stmt_position {
                return Some(cur);
            }
        }
        cur = parent;
    }
}

/// Lift an example's diff ops to aligned statement entries.
fn change_entries(ex: &ExamplePair) -> Option<Vec<Entry>> {
    use crate::editscript::{diff_units, DiffOp};
    let diff = diff_units(&ex.before, &ex.after);
    let mut entries: Vec<Entry> = Vec::new();

    let mut push = |before_stmt: Option<NodeId>, after_stmt: Option<NodeId>, order: (usize, u8)| {
        if entries
            .iter()
            .any(|e| e.before_stmt == before_stmt && e.after_stmt == after_stmt)
        {
            return;
        }
        // merge when one side coincides (several ops in one statement)
        if let Some(e) = entries.iter_mut().find(|e| {
            (before_stmt.is_some() && e.before_stmt == before_stmt)
                || (after_stmt.is_some() && e.after_stmt == after_stmt)
        }) {
            if e.before_stmt.is_none() {
                e.before_stmt = before_stmt;
            }
            if e.after_stmt.is_none() {
                e.after_stmt = after_stmt;
            }
            return;
        }
        entries.push(Entry {
            before_stmt,
            after_stmt,
            order,
        });
    };

    for op in &diff.ops {
        match op {
            DiffOp::Del { before } => {
                let sb = if ex.before.node(*before).kind.is_stmt() {
                    *before
                } else {
                    enclosing_stmt(&ex.before, *before)?
                };
                let order = (ex.before.node(sb).tok_start, 1);
                match diff.match_ba.get(&sb) {
                    Some(&sa) => push(Some(sb), Some(sa), order),
                    None => push(Some(sb), None, order),
                }
            }
            DiffOp::Upd { before, .. } | DiffOp::Mov { before, .. } => {
                let sb = enclosing_stmt(&ex.before, *before).or(if ex
                    .before
                    .node(*before)
                    .kind
                    .is_stmt()
                {
                    Some(*before)
                } else {
                    None
                })?;
                let sa = *diff.match_ba.get(&sb)?;
                push(Some(sb), Some(sa), (ex.before.node(sb).tok_start, 1));
            }
            DiffOp::Ins { after, .. } => {
                let sa = if ex.after.node(*after).kind.is_stmt() {
                    *after
                } else {
                    enclosing_stmt(&ex.after, *after)?
                };
                match diff.match_ab.get(&sa) {
                    Some(&sb) => push(Some(sb), Some(sa), (ex.before.node(sb).tok_start, 1)),
                    None => {
                        // pure insertion: order it by the preceding matched
                        // sibling on the before side
                        let pa = parent_of(&ex.after, sa)?;
                        let siblings = ex.after.children(pa);
                        let idx = siblings.iter().position(|&c| c == sa).unwrap();
                        let prev = siblings[..idx]
                            .iter()
                            .rev()
                            .find_map(|c| diff.match_ab.get(c).copied());
                        let next = siblings[idx + 1..]
                            .iter()
                            .find_map(|c| diff.match_ab.get(c).copied());
                        let order = match (prev, next) {
                            (Some(p), _) => (ex.before.node(p).tok_start, 2),
                            (None, Some(n)) => (ex.before.node(n).tok_start, 0),
                            (None, None) => (0, 0),
                        };
                        push(None, Some(sa), order);
                    }
                }
            }
        }
    }
    entries.sort_by_key(|e| e.order);
    Some(entries)
}

fn signature(ex: &ExamplePair, entries: &[Entry]) -> Vec<(EntryShape, String)> {
    entries
        .iter()
        .map(|e| {
            let kind = e
                .before_stmt
                .map(|s| ex.before.node(s).kind)
                .or_else(|| e.after_stmt.map(|s| ex.after.node(s).kind))
                .unwrap();
            (entry_shape(e), kind.name().to_string())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Rule construction
// ---------------------------------------------------------------------------

struct PartitionInput<'a> {
    examples: Vec<&'a ExamplePair>,
    entry_lists: Vec<Vec<Entry>>,
}

/// True when the statements of consecutive entries are adjacent siblings in
/// every example (no `...` needed between them).
fn entries_adjacent(input: &PartitionInput<'_>, a: usize, b: usize) -> bool {
    input.examples.iter().zip(&input.entry_lists).all(|(ex, entries)| {
        let (sa, sb) = match (entries[a].before_stmt, entries[b].before_stmt) {
            (Some(x), Some(y)) => (x, y),
            _ => return true, // insert entries attach to their anchor directly
        };
        match (parent_of(&ex.before, sa), parent_of(&ex.before, sb)) {
            (Some(pa), Some(pb)) if pa == pb => {
                let kids = ex.before.children(pa);
                let ia = kids.iter().position(|&c| c == sa).unwrap();
                let ib = kids.iter().position(|&c| c == sb).unwrap();
                ib == ia + 1
            }
            _ => false,
        }
    })
}

fn metavar_refs_of(term: &Term) -> Vec<String> {
    let mut out = Vec::new();
    term.metavar_refs(&mut out);
    out
}

/// Build one rule from a token-compatible partition. Returns the rule and
/// the generalizer (for its declarations).
fn build_rule(
    input: &PartitionInput<'_>,
    rule_name: &str,
) -> Result<GenericPatchRule> {
    let n_entries = input.entry_lists[0].len();
    let mut g = Generalizer::default();
    let mut elements: Vec<PatternElem> = Vec::new();
    let mut guard_counter = 0usize;

    for k in 0..n_entries {
        let shape = entry_shape(&input.entry_lists[0][k]);
        // gather per-example statement terms
        let before_terms: Vec<Term> = input
            .examples
            .iter()
            .zip(&input.entry_lists)
            .filter_map(|(ex, entries)| {
                entries[k].before_stmt.map(|s| Term::from_ast(&ex.before, s))
            })
            .collect();
        let after_terms: Vec<Term> = input
            .examples
            .iter()
            .zip(&input.entry_lists)
            .filter_map(|(ex, entries)| entries[k].after_stmt.map(|s| Term::from_ast(&ex.after, s)))
            .collect();

        // dots between non-adjacent entries, with rebinding guards
        if k > 0 && !entries_adjacent(input, k - 1, k) {
            let bound_so_far: Vec<(String, MetavarKind)> = g
                .decls
                .iter()
                .map(|d| (d.name.clone(), d.kind))
                .collect();
            let mut clauses = Vec::new();
            for (name, kind) in &bound_so_far {
                if *kind == MetavarKind::Identifier {
                    let fresh = format!("v{guard_counter}");
                    guard_counter += 1;
                    clauses.push(WhenClause::NotMatch(Term {
                        node: TermNode::Node {
                            kind: NodeKind::AssignExpr,
                            label: "=".into(),
                            children: vec![
                                Term::metavar(name.clone(), MetavarKind::Identifier),
                                Term::metavar(fresh, MetavarKind::Expression),
                            ],
                        },
                        pos_var: None,
                    }));
                }
            }
            elements.push(PatternElem::new(ElemBody::Dots(clauses)));
        }

        match shape {
            EntryShape::Modified => {
                let refs: Vec<&Term> = before_terms.iter().collect();
                let minus = g.gen(&refs, Slot::Root)?;
                let refs: Vec<&Term> = after_terms.iter().collect();
                let plus = g.gen(&refs, Slot::Root)?;
                if matches!(minus.node, TermNode::Metavar { .. }) {
                    return Err(Error::NoGeneralization(
                        "minus template degenerated to a bare metavariable".into(),
                    ));
                }
                elements.push(PatternElem::new(ElemBody::Minus(minus)));
                elements.push(PatternElem::new(ElemBody::Plus(PlusTerm {
                    term: plus,
                    rel_indent: 0,
                })));
            }
            EntryShape::Removed => {
                let refs: Vec<&Term> = before_terms.iter().collect();
                let minus = g.gen(&refs, Slot::Root)?;
                if matches!(minus.node, TermNode::Metavar { .. }) {
                    return Err(Error::NoGeneralization(
                        "minus template degenerated to a bare metavariable".into(),
                    ));
                }
                elements.push(PatternElem::new(ElemBody::Minus(minus)));
            }
            EntryShape::Inserted => {
                // context anchor: the statement preceding the insertion in
                // every example
                let anchors: Option<Vec<Term>> = input
                    .examples
                    .iter()
                    .zip(&input.entry_lists)
                    .map(|(ex, entries)| {
                        let sa = entries[k].after_stmt.unwrap();
                        let diff = crate::editscript::diff_units(&ex.before, &ex.after);
                        let pa = parent_of(&ex.after, sa)?;
                        let sibs = ex.after.children(pa);
                        let idx = sibs.iter().position(|&c| c == sa).unwrap();
                        let prev = sibs[..idx]
                            .iter()
                            .rev()
                            .find_map(|c| diff.match_ab.get(c).copied())?;
                        Some(Term::from_ast(&ex.before, prev))
                    })
                    .collect();
                let refs_owned = anchors.ok_or_else(|| {
                    Error::NoGeneralization("insertion has no preceding anchor statement".into())
                })?;
                let refs: Vec<&Term> = refs_owned.iter().collect();
                let anchor = g.gen(&refs, Slot::Root)?;
                if matches!(anchor.node, TermNode::Metavar { .. }) {
                    return Err(Error::NoGeneralization(
                        "context anchor degenerated to a bare metavariable".into(),
                    ));
                }
                let refs: Vec<&Term> = after_terms.iter().collect();
                let plus = g.gen(&refs, Slot::Root)?;
                // only add the anchor if the previous element is not already
                // the same context statement
                elements.push(PatternElem::new(ElemBody::Context(anchor)));
                elements.push(PatternElem::new(ElemBody::Plus(PlusTerm {
                    term: plus,
                    rel_indent: 0,
                })));
            }
        }
    }

    // metavariables referenced only in plus lines cannot bind; reject the
    // rule so the caller can report the examples as uncovered
    let mut anchor_refs = Vec::new();
    let mut plus_refs = Vec::new();
    for e in &elements {
        match &e.body {
            ElemBody::Minus(t) | ElemBody::Context(t) => anchor_refs.extend(metavar_refs_of(t)),
            ElemBody::Plus(p) => plus_refs.extend(metavar_refs_of(&p.term)),
            _ => {}
        }
    }
    for r in &plus_refs {
        if !anchor_refs.contains(r) {
            return Err(Error::NoGeneralization(format!(
                "plus template introduces unbound metavariable {r}"
            )));
        }
    }
    let decls = g
        .decls
        .into_iter()
        .filter(|d| anchor_refs.contains(&d.name) || plus_refs.contains(&d.name))
        .collect();

    Ok(GenericPatchRule {
        name: rule_name.to_string(),
        quantifier: Quantifier::Exists,
        metavars: decls,
        header: None,
        elements,
    })
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

fn changed_lines(diff_text: &str) -> Vec<(char, String)> {
    let mut out = Vec::new();
    for line in diff_text.lines() {
        if let Some(rest) = line.strip_prefix('+') {
            if !line.starts_with("+++") {
                out.push(('+', normalize_ws(rest)));
            }
        } else if let Some(rest) = line.strip_prefix('-') {
            if !line.starts_with("---") {
                out.push(('-', normalize_ws(rest)));
            }
        }
    }
    out
}

fn multiset_intersection(a: &[(char, String)], b: &[(char, String)]) -> usize {
    let mut counts: BTreeMap<&(char, String), usize> = BTreeMap::new();
    for x in a {
        *counts.entry(x).or_insert(0) += 1;
    }
    let mut common = 0;
    for y in b {
        if let Some(c) = counts.get_mut(y) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    common
}

/// Line-level recall and precision of a patch over a set of examples, after
/// whitespace normalization.
pub fn score(gp: &GenericPatch, examples: &[&ExamplePair]) -> (f64, f64) {
    let mut expected_total = 0usize;
    let mut produced_total = 0usize;
    let mut reproduced = 0usize;
    for ex in examples {
        let expected = changed_lines(&ex.expected_diff);
        let produced = match apply_patchset(gp, &ex.before, &MatchConfig::default()) {
            Ok(out) => changed_lines(&out.diff),
            Err(_) => Vec::new(),
        };
        expected_total += expected.len();
        produced_total += produced.len();
        reproduced += multiset_intersection(&expected, &produced);
    }
    let recall = if expected_total == 0 {
        1.0
    } else {
        reproduced as f64 / expected_total as f64
    };
    let precision = if produced_total == 0 {
        1.0
    } else {
        reproduced as f64 / produced_total as f64
    };
    (recall, precision)
}

fn example_covered(gp: &GenericPatch, ex: &ExamplePair) -> bool {
    let (recall, _) = score(gp, &[ex]);
    recall > 0.0
}

// ---------------------------------------------------------------------------
// Frequencies and provenance
// ---------------------------------------------------------------------------

fn frequency_of(members: &[crate::cluster::ClusterMember]) -> Frequency {
    let mut functions = std::collections::BTreeSet::new();
    let mut files = std::collections::BTreeSet::new();
    let mut patches = std::collections::BTreeSet::new();
    let mut projects = std::collections::BTreeSet::new();
    for m in members {
        functions.insert((
            m.project_id.clone(),
            m.file_path.clone(),
            m.function_name.clone(),
        ));
        files.insert((m.project_id.clone(), m.file_path.clone()));
        patches.insert(m.patch_id.clone());
        projects.insert(m.project_id.clone());
    }
    Frequency {
        hunk: members.len(),
        function: functions.len(),
        file: files.len(),
        patch: patches.len(),
        project: projects.len(),
    }
}

fn provenance_of(members: &[crate::cluster::ClusterMember]) -> Vec<Provenance> {
    members
        .iter()
        .map(|m| Provenance {
            project: m.project_id.clone(),
            commit: None,
            file: m.file_path.clone(),
            function: m.function_name.clone(),
            hunk_id: m.hunk_id.clone(),
        })
        .collect()
}

fn rule_root_name(input: &PartitionInput<'_>) -> String {
    let entries = &input.entry_lists[0];
    let ex = input.examples[0];
    let kind = entries
        .first()
        .and_then(|e| {
            e.before_stmt
                .map(|s| ex.before.node(s).kind)
                .or_else(|| e.after_stmt.map(|s| ex.after.node(s).kind))
        })
        .unwrap_or(NodeKind::ExprStmt);
    let mut out = String::new();
    for (i, c) in kind.name().chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The inference driver
// ---------------------------------------------------------------------------

/// Infer generic patches for one cluster. Wall-clock anytime behavior:
/// partitions finished before the deadline are kept.
pub fn infer(
    cluster: &PatchCluster,
    examples: &[ExamplePair],
    timeout: Duration,
) -> InferenceResult {
    let start = Instant::now();
    let deadline = start + timeout;
    let mut uncovered: Vec<String> = Vec::new();
    let mut rules: Vec<(GenericPatchRule, Vec<usize>)> = Vec::new(); // rule + example indices
    let expired = |now: Instant| now >= deadline;

    let done = |rules: Vec<(GenericPatchRule, Vec<usize>)>,
                mut uncovered: Vec<String>,
                timed_out: bool,
                start: Instant| {
        // assemble one multi-rule patch (split downstream into atomic ones)
        let mut patches = Vec::new();
        if !rules.is_empty() {
            let cluster_num = u32::from_str_radix(&cluster.cluster_id[..2], 16).unwrap_or(0);
            let mut all_rules = Vec::new();
            let mut rule_stats = Vec::new();
            let mut rule_provenance = Vec::new();
            for (i, (mut rule, idxs)) in rules.into_iter().enumerate() {
                rule.name = format!("{}_{}_{}", rule.name, cluster_num, i);
                let exs: Vec<&ExamplePair> = idxs.iter().map(|&i| &examples[i]).collect();
                let gp_probe = GenericPatch::single("probe", vec![rule.clone()]);
                let (recall, precision) = score(&gp_probe, &exs);
                if recall <= 0.0 {
                    for ex in exs {
                        uncovered.push(ex.hunk_id.clone());
                    }
                    continue;
                }
                for ex in &exs {
                    if !example_covered(&gp_probe, ex) {
                        uncovered.push(ex.hunk_id.clone());
                    }
                }
                let covered_hunks: Vec<String> =
                    idxs.iter().map(|&i| examples[i].hunk_id.clone()).collect();
                let members: Vec<crate::cluster::ClusterMember> = cluster
                    .members
                    .iter()
                    .filter(|m| covered_hunks.contains(&m.hunk_id))
                    .cloned()
                    .collect();
                rule_stats.push(PatchStats {
                    recall,
                    precision,
                    freq: frequency_of(&members),
                });
                rule_provenance.push(provenance_of(&members));
                all_rules.push(rule);
            }
            if !all_rules.is_empty() {
                let n = all_rules.len() as f64;
                let stats = PatchStats {
                    recall: rule_stats.iter().map(|s| s.recall).sum::<f64>() / n,
                    precision: rule_stats.iter().map(|s| s.precision).sum::<f64>() / n,
                    freq: frequency_of(&cluster.members),
                };
                patches.push(GenericPatch {
                    patch_id: format!("cluster_{}", cluster.cluster_id),
                    rules: all_rules,
                    provenance: provenance_of(&cluster.members),
                    stats,
                    rule_stats,
                    rule_provenance,
                });
            }
        }
        uncovered.sort();
        uncovered.dedup();
        InferenceResult {
            patches,
            uncovered_examples: uncovered,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            timed_out,
        }
    };

    if expired(Instant::now()) {
        return done(rules, examples.iter().map(|e| e.hunk_id.clone()).collect(), true, start);
    }

    // 1. deduplicate byte-identical diffs
    let mut seen = std::collections::BTreeSet::new();
    let mut work: Vec<usize> = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        if seen.insert(ex.expected_diff.clone()) {
            work.push(i);
        }
    }

    // 2. lift changes to statement entries
    let mut lifted: Vec<(usize, Vec<Entry>, Vec<(EntryShape, String)>)> = Vec::new();
    for &i in &work {
        if expired(Instant::now()) {
            return done(rules, lifted.iter().map(|(i, _, _)| examples[*i].hunk_id.clone()).collect(), true, start);
        }
        match change_entries(&examples[i]) {
            Some(entries) if !entries.is_empty() => {
                let sig = signature(&examples[i], &entries);
                lifted.push((i, entries, sig));
            }
            _ => uncovered.push(examples[i].hunk_id.clone()),
        }
    }

    // 3. group by signature, then partition by token compatibility
    let mut by_sig: BTreeMap<Vec<(String, String)>, Vec<usize>> = BTreeMap::new();
    for (pos, (_, _, sig)) in lifted.iter().enumerate() {
        let key: Vec<(String, String)> = sig
            .iter()
            .map(|(s, k)| (format!("{s:?}"), k.clone()))
            .collect();
        by_sig.entry(key).or_default().push(pos);
    }

    for (_, group) in by_sig {
        let mut partitions: Vec<Vec<usize>> = Vec::new(); // positions into `lifted`
        for &pos in &group {
            if expired(Instant::now()) {
                return done(rules, uncovered, true, start);
            }
            let mut placed = false;
            for part in partitions.iter_mut() {
                let mut attempt: Vec<usize> = part.clone();
                attempt.push(pos);
                let input = PartitionInput {
                    examples: attempt.iter().map(|&p| &examples[lifted[p].0]).collect(),
                    entry_lists: attempt.iter().map(|&p| lifted[p].1.clone()).collect(),
                };
                if build_rule(&input, "probe").is_ok() {
                    part.push(pos);
                    placed = true;
                    break;
                }
            }
            if !placed {
                partitions.push(vec![pos]);
            }
        }
        for part in partitions {
            if expired(Instant::now()) {
                return done(rules, uncovered, true, start);
            }
            let input = PartitionInput {
                examples: part.iter().map(|&p| &examples[lifted[p].0]).collect(),
                entry_lists: part.iter().map(|&p| lifted[p].1.clone()).collect(),
            };
            let name = rule_root_name(&input);
            match build_rule(&input, &name) {
                Ok(rule) => {
                    rules.push((rule, part.iter().map(|&p| lifted[p].0).collect()));
                }
                Err(_) => {
                    for &p in &part {
                        uncovered.push(examples[lifted[p].0].hunk_id.clone());
                    }
                }
            }
        }
    }

    done(rules, uncovered, false, start)
}

pub use crate::patlang::split_atomic;
