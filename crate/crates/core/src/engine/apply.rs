//! Turning match sites into concrete patches.
//!
//! Application is textual: matched minus spans are deleted (whole lines for
//! statement matches), plus terms are instantiated under the site binding
//! and inserted as lines at their positional anchor, and an expression plus
//! immediately following an expression minus splices in place. The patched
//! text re-parses and the emitted diff is the minimal line diff.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::minic::{parse_unit, AstUnit, NodeId, NodeKind};
use crate::patlang::subst::{substitute, unbound_metavars};
use crate::patlang::term::{render_plus_term, Term, TermNode};
use crate::patlang::{GenericPatch, GenericPatchRule, PlusTerm};
use crate::udiff;

use super::matching::ResolvedElem;
use super::semantics::{Binding, BoundValue};
use super::{match_rule, MatchConfig, MatchSite};

/// A concrete patch produced from one match site (or one application pass).
#[derive(Debug, Clone)]
pub struct ConcretePatch {
    /// Unified diff against the original file ("" when nothing changed).
    pub diff: String,
    pub patched_text: String,
    pub rule_name: String,
    pub site_digest: String,
    pub target_file: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleReport {
    pub rule_name: String,
    pub site_count: usize,
}

#[derive(Debug, Clone)]
pub struct PatchsetOutcome {
    pub patched_text: String,
    pub diff: String,
    pub reports: Vec<RuleReport>,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Text edits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Edit {
    start: usize,
    end: usize,
    text: String,
}

fn line_start(src: &str, at: usize) -> usize {
    src[..at].rfind('\n').map(|i| i + 1).unwrap_or(0)
}

fn line_end(src: &str, at: usize) -> usize {
    src[at..].find('\n').map(|i| at + i + 1).unwrap_or(src.len())
}

fn indent_at(src: &str, at: usize) -> String {
    let ls = line_start(src, at);
    src[ls..]
        .chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .collect()
}

/// Expand a statement's byte span to whole lines when nothing else shares
/// those lines.
fn stmt_deletion_span(src: &str, span: (usize, usize)) -> (usize, usize) {
    let (s, e) = span;
    let ls = line_start(src, s);
    let le = line_end(src, e.saturating_sub(1).max(s));
    let prefix_ws = src[ls..s].chars().all(|c| c == ' ' || c == '\t');
    let suffix_ws = src[e..le].chars().all(|c| c == ' ' || c == '\t' || c == '\n');
    if prefix_ws && suffix_ws {
        (ls, le)
    } else {
        (s, e)
    }
}

fn apply_edits(src: &str, mut edits: Vec<Edit>) -> Result<String> {
    edits.sort_by_key(|e| e.start);
    let mut out = String::with_capacity(src.len());
    let mut cursor = 0usize;
    for e in &edits {
        if e.start < cursor {
            if e.start == e.end {
                // insertion inside an already-deleted region: place at cursor
                out.push_str(&e.text);
                continue;
            }
            return Err(Error::PatternInvalid(format!(
                "overlapping edits at byte {}",
                e.start
            )));
        }
        out.push_str(&src[cursor..e.start]);
        out.push_str(&e.text);
        cursor = e.end;
    }
    out.push_str(&src[cursor..]);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

fn binding_values(binding: &Binding) -> HashMap<String, Term> {
    let mut map = HashMap::new();
    for (name, value) in binding.iter() {
        let term = match value {
            BoundValue::Term(t) => t.clone(),
            BoundValue::Ident(s) => Term::node(NodeKind::Identifier, s.clone(), vec![]),
            BoundValue::TypeText(s) => Term::node(NodeKind::TypeName, s.clone(), vec![]),
            BoundValue::Pos(_) => continue,
        };
        map.insert(name.clone(), term);
    }
    map
}

fn instantiate(
    term: &Term,
    values: &HashMap<String, Term>,
    void_fn: bool,
    warnings: &mut Vec<String>,
) -> Result<String> {
    let inst = substitute(term, values);
    let unbound = unbound_metavars(&inst);
    if !unbound.is_empty() {
        return Err(Error::PatternInvalid(format!(
            "instantiation references unbound metavariables: {}",
            unbound.join(", ")
        )));
    }
    // a bare `return` in a value-returning function becomes `return 0;`
    if let TermNode::Node { kind: NodeKind::ReturnStmt, children, .. } = &inst.node {
        if children.is_empty() && !void_fn {
            warnings.push(
                "bare `return` instantiated as `return 0;` in a value-returning function".into(),
            );
            return Ok("return 0;".to_string());
        }
    }
    Ok(render_plus_term(&inst))
}

fn is_void_function(unit: &AstUnit, func: NodeId) -> bool {
    let ty = unit.node(func).children[0];
    unit.node(ty).kind == NodeKind::TypeName && unit.node(ty).label == "void"
}

fn plus_is_expression(p: &PlusTerm) -> bool {
    match &p.term.node {
        TermNode::Node { kind, .. } => kind.is_expr(),
        TermNode::Metavar { kind, .. } => *kind == crate::patlang::term::MetavarKind::Expression,
    }
}

// ---------------------------------------------------------------------------
// Site application
// ---------------------------------------------------------------------------

fn anchor_of(elem: &ResolvedElem) -> Option<NodeId> {
    match elem {
        ResolvedElem::Context { stmt, .. } | ResolvedElem::Minus { stmt, .. } => Some(*stmt),
        _ => None,
    }
}

fn site_edits(
    unit: &AstUnit,
    site: &MatchSite,
    edits: &mut Vec<Edit>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let src = &unit.source;
    let values = binding_values(&site.binding);
    let void_fn = is_void_function(unit, site.function);
    let elems = &site.resolved;
    let mut consumed_plus = vec![false; elems.len()];

    for (i, elem) in elems.iter().enumerate() {
        match elem {
            ResolvedElem::Context { .. } | ResolvedElem::Dots => {}
            ResolvedElem::Minus { stmt, node } => {
                let is_expr_match = node != stmt && unit.node(*node).kind.is_expr();
                let whole_stmt = node == stmt
                    || (unit.node(*stmt).kind == NodeKind::ExprStmt
                        && unit.children(*stmt) == [*node]);
                // expression replacement: `- f(E)` directly followed by `+ g(E)`
                let expr_splice = match elems.get(i + 1) {
                    Some(ResolvedElem::Plus(p)) if is_expr_match && plus_is_expression(p) => {
                        Some((i + 1, p))
                    }
                    _ => None,
                };
                if let Some((pi, p)) = expr_splice {
                    let text = instantiate(&p.term, &values, void_fn, warnings)?;
                    let (s, e) = unit.byte_span(*node);
                    edits.push(Edit {
                        start: s,
                        end: e,
                        text,
                    });
                    consumed_plus[pi] = true;
                } else if whole_stmt {
                    let span = unit.byte_span(*stmt);
                    let (s, e) = stmt_deletion_span(src, span);
                    let inline = (s, e) == span; // the line holds other code
                    // a statement replacement: minus directly followed by a
                    // plus block takes the statement's place
                    let mut block = Vec::new();
                    let mut k = i + 1;
                    while let Some(ResolvedElem::Plus(p)) = elems.get(k) {
                        block.push(p.clone());
                        k += 1;
                    }
                    if inline {
                        // keep the surrounding control header parseable
                        let text = if block.is_empty() {
                            ";".to_string()
                        } else {
                            let mut parts = Vec::new();
                            for p in &block {
                                parts.push(instantiate(&p.term, &values, void_fn, warnings)?);
                            }
                            for pi in i + 1..k {
                                consumed_plus[pi] = true;
                            }
                            parts.join(" ")
                        };
                        edits.push(Edit {
                            start: s,
                            end: e,
                            text,
                        });
                    } else {
                        edits.push(Edit {
                            start: s,
                            end: e,
                            text: String::new(),
                        });
                        if !block.is_empty() {
                            let indent = indent_at(src, span.0);
                            let mut text = String::new();
                            for p in &block {
                                text.push_str(&indent);
                                text.push_str(&" ".repeat(p.rel_indent));
                                text.push_str(&instantiate(&p.term, &values, void_fn, warnings)?);
                                text.push('\n');
                            }
                            for pi in i + 1..k {
                                consumed_plus[pi] = true;
                            }
                            edits.push(Edit {
                                start: s,
                                end: s,
                                text,
                            });
                        }
                    }
                } else {
                    let (s, e) = unit.byte_span(*node);
                    edits.push(Edit {
                        start: s,
                        end: e,
                        text: String::new(),
                    });
                }
            }
            ResolvedElem::Plus(_) => {}
        }
    }

    // group leftover plus elements into blocks and insert them
    let mut i = 0;
    while i < elems.len() {
        if !matches!(elems[i], ResolvedElem::Plus(_)) || consumed_plus[i] {
            i += 1;
            continue;
        }
        let mut block = Vec::new();
        let mut k = i;
        while k < elems.len() {
            match &elems[k] {
                ResolvedElem::Plus(p) if !consumed_plus[k] => {
                    block.push(p.clone());
                    k += 1;
                }
                _ => break,
            }
        }
        // nearest following anchor, else nearest preceding
        let following = elems[k..].iter().find_map(anchor_of);
        let (insert_at, anchor_stmt) = match following {
            Some(stmt) => {
                let (s, _) = unit.byte_span(stmt);
                (line_start(src, s), stmt)
            }
            None => {
                let preceding = elems[..i].iter().rev().find_map(anchor_of).ok_or_else(|| {
                    Error::PatternInvalid("plus block has no anchor element".into())
                })?;
                let deleted = elems[..i].iter().rev().find_map(|e| match e {
                    ResolvedElem::Minus { stmt, node } if stmt == node => Some(*stmt),
                    _ => None,
                });
                match deleted {
                    // replacement: take the deleted statement's place
                    Some(stmt) => {
                        let (s, _) = unit.byte_span(stmt);
                        (line_start(src, s), stmt)
                    }
                    None => {
                        let (_, e) = unit.byte_span(preceding);
                        (line_end(src, e.saturating_sub(1)), preceding)
                    }
                }
            }
        };
        let indent = indent_at(src, unit.byte_span(anchor_stmt).0);
        let mut text = String::new();
        for p in &block {
            text.push_str(&indent);
            text.push_str(&" ".repeat(p.rel_indent));
            text.push_str(&instantiate(&p.term, &values, void_fn, warnings)?);
            text.push('\n');
        }
        edits.push(Edit {
            start: insert_at,
            end: insert_at,
            text,
        });
        i = k;
    }
    Ok(())
}

/// Apply every given site of one rule in a single pass.
pub fn apply_sites(unit: &AstUnit, sites: &[MatchSite]) -> Result<(String, Vec<String>)> {
    let mut edits = Vec::new();
    let mut warnings = Vec::new();
    for site in sites {
        site_edits(unit, site, &mut edits, &mut warnings)?;
    }
    let patched = apply_edits(&unit.source, edits)?;
    Ok((patched, warnings))
}

/// Apply a rule at one site, producing a minimal unified diff.
pub fn apply_rule(rule: &GenericPatchRule, unit: &AstUnit, site: &MatchSite) -> Result<ConcretePatch> {
    let (patched, warnings) = apply_sites(unit, std::slice::from_ref(site))?;
    let diff = udiff::unified_diff(&unit.source, &patched, &unit.file, 3);
    Ok(ConcretePatch {
        diff,
        patched_text: patched,
        rule_name: rule.name.clone(),
        site_digest: site.digest(),
        target_file: unit.file.clone(),
        warnings,
    })
}

/// Apply a whole generic patch: rules in order, each matched against the
/// result of the previous one.
pub fn apply_patchset(
    gp: &GenericPatch,
    unit: &AstUnit,
    config: &MatchConfig,
) -> Result<PatchsetOutcome> {
    let mut text = unit.source.clone();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for rule in &gp.rules {
        let current = parse_unit(&text, &unit.file);
        let sites = match_rule(rule, &current, config);
        reports.push(RuleReport {
            rule_name: rule.name.clone(),
            site_count: sites.len(),
        });
        if sites.is_empty() {
            continue;
        }
        let (patched, mut w) = apply_sites(&current, &sites)?;
        warnings.append(&mut w);
        text = patched;
    }
    let diff = udiff::unified_diff(&unit.source, &text, &unit.file, 3);
    Ok(PatchsetOutcome {
        patched_text: text,
        diff,
        reports,
        warnings,
    })
}
