//! The generic-patch language: data model, text grammar, parser, renderer
//! and static validator.
//!
//! A pattern file holds one or more rules:
//!
//! ```text
//! @name exists@
//! type T;
//! identifier fn, param, fld;
//! position p;
//! @@
//! fn(..., T *param, ...){
//! ... when != param = new_val
//!     when != param == NULL
//! +   if (param == NULL)
//! +       return
//!     param->fld@p
//! ... when any
//! }
//! ```
//!
//! Body lines are context (leading space), `-` removals, `+` additions, `...`
//! sequence abstraction with `when` constraints on following lines, and
//! disjunctions written as `(`, `|`, `)` lines. Nests (`<... ...>`) are
//! recognized and rejected as unsupported. The default rule quantifier is
//! `forall`; `exists` is stated next to the rule name.
//!
//! Undeclared identifiers in pattern terms are concrete program identifiers.
//! The one exception: in a `when != M = x` clause guarding reassignment, an
//! undeclared right-hand side becomes an implicitly fresh expression
//! metavariable (a blanket rule would also swallow concrete guards such as
//! `IS_ERR(param)`).

pub mod parse;
pub mod render;
pub mod subst;
pub mod term;

use serde::{Deserialize, Serialize};

pub use parse::parse_generic_patch;
pub use render::render_generic_patch;
pub use term::{MetavarDecl, MetavarKind, Term, TermNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WhenClause {
    /// `when != t`: no node of the matched segment may match `t`.
    NotMatch(Term),
    /// `when any`: clears all constraints on this `...`.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlusTerm {
    pub term: Term,
    /// Extra indentation of this plus line relative to the block's first.
    pub rel_indent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElemBody {
    Context(Term),
    Minus(Term),
    Plus(PlusTerm),
    Dots(Vec<WhenClause>),
    Disjunction(Vec<Vec<PatternElem>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternElem {
    pub body: ElemBody,
    /// 1-based line in the pattern file (0 for synthesized elements).
    pub line: u32,
}

impl PatternElem {
    pub fn new(body: ElemBody) -> Self {
        PatternElem { body, line: 0 }
    }

    pub fn is_dots(&self) -> bool {
        matches!(self.body, ElemBody::Dots(_))
    }

    pub fn is_plus(&self) -> bool {
        matches!(self.body, ElemBody::Plus(_))
    }

    pub fn is_anchor(&self) -> bool {
        matches!(self.body, ElemBody::Context(_) | ElemBody::Minus(_))
    }
}

/// Function-header template: `fn(..., T *param, ...)` plus the `{ ... }`
/// brackets around the body elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderPattern {
    pub name: Slot,
    pub params: Vec<ParamPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Metavar(String),
    Concrete(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamPattern {
    /// `...`: any run of parameters.
    Dots,
    /// `T *param`, `int x`, `struct foo *p`.
    Decl { ty: Slot, stars: usize, name: Slot },
    /// A `parameter`-kind metavariable standing for one whole parameter.
    Whole(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericPatchRule {
    pub name: String,
    pub quantifier: Quantifier,
    pub metavars: Vec<MetavarDecl>,
    pub header: Option<HeaderPattern>,
    pub elements: Vec<PatternElem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub project: String,
    pub commit: Option<String>,
    pub file: String,
    pub function: Option<String>,
    pub hunk_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Frequency {
    pub hunk: usize,
    pub function: usize,
    pub file: usize,
    pub patch: usize,
    pub project: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PatchStats {
    pub recall: f64,
    pub precision: f64,
    pub freq: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericPatch {
    pub patch_id: String,
    pub rules: Vec<GenericPatchRule>,
    pub provenance: Vec<Provenance>,
    pub stats: PatchStats,
    /// Per-rule statistics for multi-rule patches (same length as `rules`
    /// when present); used when splitting into atomic patches.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_stats: Vec<PatchStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_provenance: Vec<Vec<Provenance>>,
}

impl GenericPatch {
    pub fn single(patch_id: impl Into<String>, rules: Vec<GenericPatchRule>) -> Self {
        GenericPatch {
            patch_id: patch_id.into(),
            rules,
            provenance: Vec::new(),
            stats: PatchStats::default(),
            rule_stats: Vec::new(),
            rule_provenance: Vec::new(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        self.rules.len() == 1
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub rule: String,
    pub line: u32,
    pub msg: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: rule {}, line {}: {}", self.rule, self.line, self.msg)
    }
}

fn collect_refs(elems: &[PatternElem], anchors: &mut Vec<String>, plus: &mut Vec<String>, whens: &mut Vec<String>) {
    for e in elems {
        match &e.body {
            ElemBody::Context(t) | ElemBody::Minus(t) => t.metavar_refs(anchors),
            ElemBody::Plus(p) => p.term.metavar_refs(plus),
            ElemBody::Dots(clauses) => {
                for c in clauses {
                    if let WhenClause::NotMatch(t) = c {
                        t.metavar_refs(whens);
                    }
                }
            }
            ElemBody::Disjunction(branches) => {
                for b in branches {
                    collect_refs(b, anchors, plus, whens);
                }
            }
        }
    }
}

fn check_elements(rule: &GenericPatchRule, elems: &[PatternElem], issues: &mut Vec<Issue>) {
    let mut prev_dots = false;
    for e in elems {
        match &e.body {
            ElemBody::Dots(_) => {
                if prev_dots {
                    issues.push(Issue {
                        severity: Severity::Error,
                        rule: rule.name.clone(),
                        line: e.line,
                        msg: "`...` may not be adjacent to `...`".into(),
                    });
                }
                prev_dots = true;
            }
            ElemBody::Disjunction(branches) => {
                prev_dots = false;
                if branches.len() < 2 {
                    issues.push(Issue {
                        severity: Severity::Error,
                        rule: rule.name.clone(),
                        line: e.line,
                        msg: "disjunction needs at least two branches".into(),
                    });
                }
                for b in branches {
                    check_elements(rule, b, issues);
                }
            }
            ElemBody::Plus(p) => {
                prev_dots = false;
                if p.term.has_position() {
                    issues.push(Issue {
                        severity: Severity::Error,
                        rule: rule.name.clone(),
                        line: e.line,
                        msg: "position annotations are not allowed on `+` lines".into(),
                    });
                }
            }
            _ => prev_dots = false,
        }
    }
}

/// Static checks over a parsed patch. An empty list means every invariant
/// holds; warnings do not block use.
pub fn validate(gp: &GenericPatch) -> Vec<Issue> {
    let mut issues = Vec::new();
    if gp.rules.is_empty() {
        issues.push(Issue {
            severity: Severity::Error,
            rule: String::new(),
            line: 0,
            msg: "patch has no rules".into(),
        });
    }
    for rule in &gp.rules {
        let mut seen = std::collections::BTreeSet::new();
        for d in &rule.metavars {
            if !seen.insert(d.name.clone()) {
                issues.push(Issue {
                    severity: Severity::Error,
                    rule: rule.name.clone(),
                    line: 0,
                    msg: format!("metavariable {} declared twice", d.name),
                });
            }
        }

        let declared: Vec<&MetavarDecl> = rule.metavars.iter().collect();
        let kind_of = |n: &str| declared.iter().find(|d| d.name == n).map(|d| d.kind);

        let mut anchor_refs = Vec::new();
        let mut plus_refs = Vec::new();
        let mut when_refs = Vec::new();
        collect_refs(&rule.elements, &mut anchor_refs, &mut plus_refs, &mut when_refs);
        if let Some(h) = &rule.header {
            if let Slot::Metavar(n) = &h.name {
                anchor_refs.push(n.clone());
            }
            for p in &h.params {
                match p {
                    ParamPattern::Decl { ty, name, .. } => {
                        if let Slot::Metavar(n) = ty {
                            anchor_refs.push(n.clone());
                        }
                        if let Slot::Metavar(n) = name {
                            anchor_refs.push(n.clone());
                        }
                    }
                    ParamPattern::Whole(n) => anchor_refs.push(n.clone()),
                    ParamPattern::Dots => {}
                }
            }
        }

        // every position annotation must name a declared position metavar
        let all_pos: Vec<String> = anchor_refs
            .iter()
            .chain(when_refs.iter())
            .filter(|n| kind_of(n) == Some(MetavarKind::Position))
            .cloned()
            .collect();
        let check_pos = |elems: &[PatternElem]| {
            fn walk_terms<'a>(elems: &'a [PatternElem], out: &mut Vec<&'a Term>) {
                for e in elems {
                    match &e.body {
                        ElemBody::Context(t) | ElemBody::Minus(t) => out.push(t),
                        ElemBody::Plus(p) => out.push(&p.term),
                        ElemBody::Dots(cs) => {
                            for c in cs {
                                if let WhenClause::NotMatch(t) = c {
                                    out.push(t);
                                }
                            }
                        }
                        ElemBody::Disjunction(bs) => {
                            for b in bs {
                                walk_terms(b, out);
                            }
                        }
                    }
                }
            }
            let mut terms = Vec::new();
            walk_terms(elems, &mut terms);
            let mut names = Vec::new();
            for t in terms {
                collect_pos_names(t, &mut names);
            }
            names
        };
        for name in check_pos(&rule.elements) {
            if kind_of(&name) != Some(MetavarKind::Position) {
                issues.push(Issue {
                    severity: Severity::Error,
                    rule: rule.name.clone(),
                    line: 0,
                    msg: format!("undeclared metavariable {name} used as a position"),
                });
            }
        }
        let _ = all_pos;

        // anchor requirement
        fn has_anchor(elems: &[PatternElem]) -> bool {
            elems.iter().any(|e| match &e.body {
                ElemBody::Context(_) | ElemBody::Minus(_) => true,
                ElemBody::Disjunction(bs) => bs.iter().all(|b| has_anchor(b)),
                _ => false,
            })
        }
        if rule.elements.is_empty() {
            issues.push(Issue {
                severity: Severity::Error,
                rule: rule.name.clone(),
                line: 0,
                msg: "rule body is empty".into(),
            });
        } else if !has_anchor(&rule.elements) {
            issues.push(Issue {
                severity: Severity::Error,
                rule: rule.name.clone(),
                line: 0,
                msg: "no anchor context: body needs at least one context or `-` element".into(),
            });
        }

        check_elements(rule, &rule.elements, &mut issues);

        // declared-but-unused warning; plus-only references are errors
        for d in &rule.metavars {
            let in_anchor = anchor_refs.contains(&d.name);
            let in_plus = plus_refs.contains(&d.name);
            let in_when = when_refs.contains(&d.name);
            if !in_anchor && !in_plus && !in_when {
                issues.push(Issue {
                    severity: Severity::Warning,
                    rule: rule.name.clone(),
                    line: 0,
                    msg: format!("metavariable {} declared but never referenced", d.name),
                });
            }
            if in_plus && !in_anchor && d.kind != MetavarKind::Position {
                issues.push(Issue {
                    severity: Severity::Error,
                    rule: rule.name.clone(),
                    line: 0,
                    msg: format!(
                        "metavariable {} appears only in `+` lines and can never be bound",
                        d.name
                    ),
                });
            }
        }
    }
    issues
}

fn collect_pos_names(t: &Term, out: &mut Vec<String>) {
    if let Some(p) = &t.pos_var {
        out.push(p.clone());
    }
    if let TermNode::Node { children, .. } = &t.node {
        for c in children {
            collect_pos_names(c, out);
        }
    }
}

/// Split a multi-rule patch into one patch per rule. Per-rule statistics and
/// provenance are used when present; ids get a rule-index suffix.
pub fn split_atomic(gp: &GenericPatch) -> Vec<GenericPatch> {
    if gp.rules.len() <= 1 {
        return vec![gp.clone()];
    }
    gp.rules
        .iter()
        .enumerate()
        .map(|(i, r)| GenericPatch {
            patch_id: format!("{}_r{}", gp.patch_id, i),
            rules: vec![r.clone()],
            provenance: gp
                .rule_provenance
                .get(i)
                .cloned()
                .unwrap_or_else(|| gp.provenance.clone()),
            stats: gp.rule_stats.get(i).copied().unwrap_or(gp.stats),
            rule_stats: Vec::new(),
            rule_provenance: Vec::new(),
        })
        .collect()
}
