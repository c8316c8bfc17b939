//! Canonical rendering of generic patches. `parse(render(gp))` is
//! structurally equal to `gp`, and the text form is a fixpoint after one
//! render.

use super::term::{render_plus_term, render_term, MetavarKind};
use super::{
    ElemBody, GenericPatch, GenericPatchRule, HeaderPattern, ParamPattern, PatternElem, Quantifier,
    Slot, WhenClause,
};

const KIND_ORDER: &[MetavarKind] = &[
    MetavarKind::Type,
    MetavarKind::Position,
    MetavarKind::Identifier,
    MetavarKind::Parameter,
    MetavarKind::Expression,
    MetavarKind::Statement,
    MetavarKind::Constant,
];

fn render_header(h: &HeaderPattern) -> String {
    let slot = |s: &Slot| match s {
        Slot::Metavar(n) | Slot::Concrete(n) => n.clone(),
    };
    let params: Vec<String> = h
        .params
        .iter()
        .map(|p| match p {
            ParamPattern::Dots => "...".to_string(),
            ParamPattern::Whole(n) => n.clone(),
            ParamPattern::Decl { ty, stars, name } => {
                let mut s = slot(ty);
                s.push(' ');
                s.push_str(&"*".repeat(*stars));
                s.push_str(&slot(name));
                s
            }
        })
        .collect();
    format!("{}({}){{", slot(&h.name), params.join(", "))
}

fn render_elements(elems: &[PatternElem], indent: &str, out: &mut String) {
    for e in elems {
        match &e.body {
            ElemBody::Context(t) => {
                out.push_str(indent);
                out.push_str(&render_term(t));
                out.push('\n');
            }
            ElemBody::Minus(t) => {
                out.push_str("- ");
                out.push_str(&render_term(t));
                out.push('\n');
            }
            ElemBody::Plus(p) => {
                out.push('+');
                out.push_str(&" ".repeat(1 + p.rel_indent));
                out.push_str(&render_plus_term(&p.term));
                out.push('\n');
            }
            ElemBody::Dots(clauses) => {
                if clauses.is_empty() {
                    out.push_str("...\n");
                } else {
                    for (i, c) in clauses.iter().enumerate() {
                        if i == 0 {
                            out.push_str("... ");
                        } else {
                            out.push_str("    ");
                        }
                        match c {
                            WhenClause::Any => out.push_str("when any\n"),
                            WhenClause::NotMatch(t) => {
                                out.push_str("when != ");
                                out.push_str(&render_term(t));
                                out.push('\n');
                            }
                        }
                    }
                }
            }
            ElemBody::Disjunction(branches) => {
                out.push_str("(\n");
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        out.push_str("|\n");
                    }
                    render_elements(b, indent, out);
                }
                out.push_str(")\n");
            }
        }
    }
}

fn render_rule(rule: &GenericPatchRule, out: &mut String) {
    out.push('@');
    out.push_str(&rule.name);
    if rule.quantifier == Quantifier::Exists {
        out.push_str(" exists");
    }
    out.push_str("@\n");
    for kind in KIND_ORDER {
        let names: Vec<&str> = rule
            .metavars
            .iter()
            .filter(|d| d.kind == *kind)
            .map(|d| d.name.as_str())
            .collect();
        if !names.is_empty() {
            out.push_str(kind.keyword());
            out.push(' ');
            out.push_str(&names.join(", "));
            out.push_str(";\n");
        }
    }
    out.push_str("@@\n");
    match &rule.header {
        Some(h) => {
            out.push_str(&render_header(h));
            out.push('\n');
            render_elements(&rule.elements, "    ", out);
            out.push_str("}\n");
        }
        None => render_elements(&rule.elements, " ", out),
    }
}

/// Canonical text for a generic patch.
pub fn render_generic_patch(gp: &GenericPatch) -> String {
    let mut out = String::new();
    for (i, rule) in gp.rules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_rule(rule, &mut out);
    }
    out
}
