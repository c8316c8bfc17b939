//! Random generators for the acceptance suite: MiniC units, matcher rules,
//! edit scripts and single-rule templates, all seeded for reproducibility.

use genpatch_core::editscript::{ActionKind, EditAction};
use genpatch_core::minic::NodeKind;
use genpatch_core::patlang::term::{parse_plus_term, parse_term, MetavarDecl, MetavarKind, Term, TermNode};
use genpatch_core::patlang::{
    ElemBody, GenericPatchRule, HeaderPattern, ParamPattern, PatternElem, PlusTerm, Quantifier,
    Slot, WhenClause,
};
use rand::prelude::*;

// ---------------------------------------------------------------------------
// Random MiniC units (<= 12 statements)
// ---------------------------------------------------------------------------

const IDS: &[&str] = &["a", "b", "c", "x", "y", "n"];
const PTRS: &[&str] = &["p", "q"];
const FIELDS: &[&str] = &["len", "next", "val"];
const FNS: &[&str] = &["g", "h", "log", "put"];
const CMPS: &[&str] = &["==", "!=", "<", "<=", ">", ">="];

pub struct UnitGen<'r, R: Rng> {
    pub rng: &'r mut R,
    stmts_left: usize,
}

impl<'r, R: Rng> UnitGen<'r, R> {
    pub fn new(rng: &'r mut R, max_stmts: usize) -> Self {
        UnitGen {
            rng,
            stmts_left: max_stmts,
        }
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn expr(&mut self, depth: usize) -> String {
        let choice = self.rng.gen_range(0..10);
        match choice {
            0..=3 => self.pick(IDS).to_string(),
            4 | 5 => self.rng.gen_range(0..5).to_string(),
            6 => format!("{}->{}", self.pick(PTRS), self.pick(FIELDS)),
            7 if depth < 2 => format!("{}({})", self.pick(FNS), self.expr(depth + 1)),
            8 if depth < 2 => {
                let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
                format!("{} {} {}", self.expr(depth + 1), op, self.expr(depth + 1))
            }
            _ => self.pick(IDS).to_string(),
        }
    }

    fn cond(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => format!("{} {} {}", self.pick(IDS), self.pick(CMPS), self.expr(2)),
            1 => format!("{} != 0", self.pick(PTRS)),
            2 => format!(
                "{} {} {} && {} {} 0",
                self.pick(IDS),
                self.pick(CMPS),
                self.expr(2),
                self.pick(IDS),
                self.pick(CMPS)
            ),
            _ => self.pick(IDS).to_string(),
        }
    }

    fn stmt(&mut self, out: &mut String, indent: usize, depth: usize, in_loop: bool) {
        if self.stmts_left == 0 {
            return;
        }
        self.stmts_left -= 1;
        let pad = "    ".repeat(indent);
        match self.rng.gen_range(0..10) {
            0 | 1 => out.push_str(&format!("{pad}{} = {};\n", self.pick(IDS), self.expr(0))),
            2 | 3 => out.push_str(&format!("{pad}{}({});\n", self.pick(FNS), self.expr(1))),
            4 => out.push_str(&format!(
                "{pad}{} = {}->{};\n",
                self.pick(IDS),
                self.pick(PTRS),
                self.pick(FIELDS)
            )),
            5 => out.push_str(&format!("{pad}return {};\n", self.expr(1))),
            6 if depth < 2 => {
                out.push_str(&format!("{pad}if ({}) {{\n", self.cond()));
                self.stmt(out, indent + 1, depth + 1, in_loop);
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    self.stmt(out, indent + 1, depth + 1, in_loop);
                }
                out.push_str(&format!("{pad}}}\n"));
            }
            7 if depth < 2 => {
                out.push_str(&format!("{pad}while ({}) {{\n", self.cond()));
                self.stmt(out, indent + 1, depth + 1, true);
                if in_loop && self.rng.gen_bool(0.3) && self.stmts_left > 0 {
                    self.stmts_left -= 1;
                    out.push_str(&format!("{pad}    break;\n"));
                }
                out.push_str(&format!("{pad}}}\n"));
            }
            8 if in_loop => out.push_str(&format!(
                "{pad}{};\n",
                ["break", "continue"][self.rng.gen_range(0..2)]
            )),
            _ => out.push_str(&format!("{pad}{}({}, {});\n", self.pick(FNS), self.expr(1), self.expr(1))),
        }
    }

    pub fn unit_source(&mut self) -> String {
        let mut body = String::new();
        let n = self.rng.gen_range(1..=4);
        for _ in 0..n {
            self.stmt(&mut body, 1, 0, false);
        }
        format!("int f(int a, int b, struct node *p, char *q) {{\n{body}}}\n")
    }
}

// ---------------------------------------------------------------------------
// Random matcher rules (<= 4 pattern elements)
// ---------------------------------------------------------------------------

fn decls() -> Vec<MetavarDecl> {
    vec![
        MetavarDecl { name: "E".into(), kind: MetavarKind::Expression },
        MetavarDecl { name: "F".into(), kind: MetavarKind::Expression },
        MetavarDecl { name: "I".into(), kind: MetavarKind::Identifier },
        MetavarDecl { name: "K".into(), kind: MetavarKind::Constant },
        MetavarDecl { name: "S".into(), kind: MetavarKind::Statement },
        MetavarDecl { name: "T".into(), kind: MetavarKind::Type },
        MetavarDecl { name: "pos".into(), kind: MetavarKind::Position },
    ]
}

const ANCHOR_TERMS: &[&str] = &[
    "g(E)",
    "h(E, F)",
    "I = E;",
    "x = E;",
    "return E;",
    "p->len",
    "q->F",
    "I = p->len;",
    "log(E);",
    "if (E) S",
    "while (E) S",
    "E == K",
    "g(E)@pos",
    "break;",
];

const WHEN_TERMS: &[&str] = &["I = v", "g(E)", "a == 0", "p != 0", "x = E", "put(E)"];

pub fn random_rule<R: Rng>(rng: &mut R) -> Option<GenericPatchRule> {
    let ds = decls();
    let n_elems = rng.gen_range(1..=4);
    let mut elements: Vec<PatternElem> = Vec::new();
    let mut prev_dots = false;
    for _ in 0..n_elems {
        let kind = rng.gen_range(0..10);
        match kind {
            0..=2 if !prev_dots => {
                let mut clauses = Vec::new();
                for _ in 0..rng.gen_range(0..=2) {
                    let t = WHEN_TERMS[rng.gen_range(0..WHEN_TERMS.len())];
                    let mut term = parse_term(t, &ds).ok()?;
                    freshen(&mut term, &ds);
                    clauses.push(WhenClause::NotMatch(term));
                }
                if rng.gen_bool(0.1) {
                    clauses.push(WhenClause::Any);
                }
                elements.push(PatternElem::new(ElemBody::Dots(clauses)));
                prev_dots = true;
            }
            3 => {
                let a = parse_term(ANCHOR_TERMS[rng.gen_range(0..ANCHOR_TERMS.len())], &ds).ok()?;
                let b = parse_term(ANCHOR_TERMS[rng.gen_range(0..ANCHOR_TERMS.len())], &ds).ok()?;
                elements.push(PatternElem::new(ElemBody::Disjunction(vec![
                    vec![PatternElem::new(ElemBody::Minus(a))],
                    vec![PatternElem::new(ElemBody::Context(b))],
                ])));
                prev_dots = false;
            }
            4 => {
                let t = parse_plus_term("log(E)", &ds).ok()?;
                elements.push(PatternElem::new(ElemBody::Plus(PlusTerm {
                    term: t,
                    rel_indent: 0,
                })));
                prev_dots = false;
            }
            _ => {
                let text = ANCHOR_TERMS[rng.gen_range(0..ANCHOR_TERMS.len())];
                let term = parse_term(text, &ds).ok()?;
                let body = if rng.gen_bool(0.5) {
                    ElemBody::Minus(term)
                } else {
                    ElemBody::Context(term)
                };
                elements.push(PatternElem::new(body));
                prev_dots = false;
            }
        }
    }

    let header = if rng.gen_bool(0.3) {
        Some(HeaderPattern {
            name: Slot::Metavar("fn".into()),
            params: match rng.gen_range(0..3) {
                0 => vec![ParamPattern::Dots],
                1 => vec![
                    ParamPattern::Dots,
                    ParamPattern::Decl {
                        ty: Slot::Metavar("T".into()),
                        stars: 1,
                        name: Slot::Metavar("I".into()),
                    },
                    ParamPattern::Dots,
                ],
                _ => vec![
                    ParamPattern::Decl {
                        ty: Slot::Concrete("int".into()),
                        stars: 0,
                        name: Slot::Metavar("I".into()),
                    },
                    ParamPattern::Dots,
                ],
            },
        })
    } else {
        None
    };
    // header rules need dots at the ends to span the whole body in general
    let mut elements = elements;
    if header.is_some() {
        if !matches!(elements.first().map(|e| &e.body), Some(ElemBody::Dots(_))) {
            elements.insert(0, PatternElem::new(ElemBody::Dots(vec![])));
        }
        if !matches!(elements.last().map(|e| &e.body), Some(ElemBody::Dots(_))) {
            elements.push(PatternElem::new(ElemBody::Dots(vec![])));
        }
    }

    let mut ds = decls();
    ds.push(MetavarDecl {
        name: "fn".into(),
        kind: MetavarKind::Identifier,
    });
    let rule = GenericPatchRule {
        name: "r".into(),
        quantifier: if rng.gen_bool(0.5) {
            Quantifier::Exists
        } else {
            Quantifier::Forall
        },
        metavars: ds,
        header,
        elements,
    };
    // keep only rules that satisfy the static invariants (ignoring unused
    // metavariable warnings)
    let gp = genpatch_core::patlang::GenericPatch::single("probe", vec![rule.clone()]);
    let bad = genpatch_core::patlang::validate(&gp)
        .into_iter()
        .any(|i| i.severity == genpatch_core::patlang::Severity::Error);
    if bad {
        None
    } else {
        Some(rule)
    }
}

/// Mimic the parser's implicit-fresh treatment for `when != I = v`.
fn freshen(t: &mut Term, ds: &[MetavarDecl]) {
    if let TermNode::Node { kind: NodeKind::AssignExpr, children, .. } = &mut t.node {
        if matches!(children[0].node, TermNode::Metavar { .. }) {
            if let TermNode::Node { kind: NodeKind::Identifier, label, .. } = &children[1].node {
                if !ds.iter().any(|d| d.name == *label) {
                    children[1] = Term::metavar(label.clone(), MetavarKind::Expression);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random edit scripts (serialization bijectivity)
// ---------------------------------------------------------------------------

const TOKEN_POOL: &[&str] = &[
    "x", "y", "=", "1", ";", "foo", "(", ")", "p", "->", "len", "\"a @TO@ b\"", "\\", "@", "@@",
    "return", "0",
];

pub fn random_script<R: Rng>(rng: &mut R) -> Vec<EditAction> {
    let kinds = [ActionKind::Mov, ActionKind::Del, ActionKind::Ins, ActionKind::Upd];
    let types = [
        NodeKind::ExprStmt,
        NodeKind::ReturnStmt,
        NodeKind::IfStmt,
        NodeKind::CallExpr,
        NodeKind::BinaryExpr,
        NodeKind::Identifier,
        NodeKind::Literal,
        NodeKind::CompoundStmt,
    ];
    let tok = |rng: &mut R| -> String {
        let n = rng.gen_range(0..=4);
        (0..n)
            .map(|_| TOKEN_POOL[rng.gen_range(0..TOKEN_POOL.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let n = rng.gen_range(1..=5);
    let mut depth = 0usize;
    (0..n)
        .map(|_| {
            let kind = kinds[rng.gen_range(0..kinds.len())];
            depth = match rng.gen_range(0..3) {
                0 => 0,
                1 => depth,
                _ => depth + 1,
            };
            let src_type = types[rng.gen_range(0..types.len())].name().to_string();
            match kind {
                ActionKind::Del => EditAction {
                    kind,
                    depth,
                    src_type,
                    src_tokens: tok(rng),
                    tgt_type: None,
                    tgt_tokens: None,
                },
                ActionKind::Upd => EditAction {
                    kind,
                    depth,
                    src_type,
                    src_tokens: tok(rng),
                    tgt_type: None,
                    tgt_tokens: Some(tok(rng)),
                },
                ActionKind::Mov | ActionKind::Ins => EditAction {
                    kind,
                    depth,
                    src_type,
                    src_tokens: tok(rng),
                    tgt_type: Some(types[rng.gen_range(0..types.len())].name().to_string()),
                    tgt_tokens: Some(tok(rng)),
                },
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random single-rule templates for the inference-closure criterion
// ---------------------------------------------------------------------------

pub struct TemplateCase {
    pub rule: GenericPatchRule,
    /// Per example, the (before, after) fragment sources.
    pub fragments: Vec<(String, String)>,
}

const CTX: &[&str] = &["setup();", "mark(9);", "barrier();", "close_all();"];

/// Build a template and k instantiations with fresh identifiers per example.
pub fn random_template<R: Rng>(rng: &mut R, k: usize) -> TemplateCase {
    let callee = ["refresh", "convert", "emit", "track"][rng.gen_range(0..4)];
    let callee2 = ["refresh2", "convert2", "emit2", "track2"][rng.gen_range(0..4)];
    let n_slots = rng.gen_range(1..=2);
    let slots: Vec<String> = (0..n_slots).map(|i| format!("E{i}")).collect();
    let slot_list = slots.join(", ");
    let form = rng.gen_range(0..7);

    // minus/plus statement templates as text over E0..En; `...` marks a gap
    // covered by an unchanged statement in the instantiations
    let (minus, plus): (Vec<String>, Vec<String>) = match form {
        0 => (
            vec![format!("{callee}({slot_list});")],
            vec![format!("{callee}({slot_list}, 0);")],
        ),
        1 => (
            vec![format!("{callee}(E0);")],
            vec![format!("{callee2}(E0);")],
        ),
        2 => (
            vec![format!("return {callee}(E0);")],
            vec![format!("return {callee2}(E0);")],
        ),
        3 => (vec![format!("{callee}({slot_list});")], vec![]),
        4 => (
            vec![format!("{callee}(E0);"), format!("{callee2}(E0);")],
            vec![format!("{callee}(E0, 1);"), format!("{callee2}(E0, 2);")],
        ),
        5 => (
            vec![format!("if ({callee}(E0) == 0) return E0;")],
            vec![format!("if ({callee}(E0) != 0) return E0;")],
        ),
        _ => (
            vec![format!("{callee}(E0);"), "...".into(), format!("{callee2}(E0);")],
            vec![],
        ),
    };

    let decls: Vec<MetavarDecl> = slots
        .iter()
        .map(|s| MetavarDecl {
            name: s.clone(),
            kind: MetavarKind::Expression,
        })
        .collect();
    let mut elements = Vec::new();
    let stmt_minus: Vec<&String> = minus.iter().filter(|m| *m != "...").collect();
    let paired = stmt_minus.len() == plus.len();
    let mut plus_iter = plus.iter();
    for m in &minus {
        if m == "..." {
            elements.push(PatternElem::new(ElemBody::Dots(vec![])));
            continue;
        }
        elements.push(PatternElem::new(ElemBody::Minus(
            parse_term(m, &decls).expect("template minus parses"),
        )));
        if paired {
            if let Some(p) = plus_iter.next() {
                elements.push(PatternElem::new(ElemBody::Plus(PlusTerm {
                    term: parse_plus_term(p, &decls).expect("template plus parses"),
                    rel_indent: 0,
                })));
            }
        }
    }
    if !paired {
        for p in &plus {
            elements.push(PatternElem::new(ElemBody::Plus(PlusTerm {
                term: parse_plus_term(p, &decls).expect("template plus parses"),
                rel_indent: 0,
            })));
        }
    }
    let used: Vec<String> = {
        let mut refs = Vec::new();
        for e in &elements {
            match &e.body {
                ElemBody::Minus(t) | ElemBody::Context(t) => t.metavar_refs(&mut refs),
                ElemBody::Plus(p) => p.term.metavar_refs(&mut refs),
                _ => {}
            }
        }
        refs
    };
    let rule = GenericPatchRule {
        name: "template".into(),
        quantifier: Quantifier::Exists,
        metavars: decls.into_iter().filter(|d| used.contains(&d.name)).collect(),
        header: None,
        elements,
    };

    // instantiate
    let mut fragments = Vec::new();
    for ex in 0..k {
        let values: Vec<String> = (0..n_slots).map(|i| format!("v{ex}_{i}")).collect();
        let subst = |line: &str| -> String {
            let mut s = line.to_string();
            for (i, v) in values.iter().enumerate() {
                s = s.replace(&format!("E{i}"), v);
            }
            s
        };
        let mut before = format!("void fx{ex}(void) {{\n");
        let mut after = before.clone();
        before.push_str(&format!("    {}\n", CTX[0]));
        after.push_str(&format!("    {}\n", CTX[0]));
        for m in &minus {
            if m == "..." {
                // the gap is an unchanged statement present on both sides
                before.push_str(&format!("    {}\n", CTX[2]));
                after.push_str(&format!("    {}\n", CTX[2]));
            } else {
                before.push_str(&format!("    {}\n", subst(m)));
            }
        }
        for p in &plus {
            after.push_str(&format!("    {}\n", subst(p)));
        }
        before.push_str(&format!("    {}\n}}\n", CTX[1]));
        after.push_str(&format!("    {}\n}}\n", CTX[1]));
        fragments.push((before, after));
    }
    TemplateCase { rule, fragments }
}

// ---------------------------------------------------------------------------
// Canonical rule form (equality up to metavariable renaming)
// ---------------------------------------------------------------------------

fn rename_term(t: &Term, map: &std::collections::BTreeMap<String, String>) -> Term {
    let mut out = match &t.node {
        TermNode::Metavar { name, kind } => Term::metavar(
            map.get(name).cloned().unwrap_or_else(|| name.clone()),
            *kind,
        ),
        TermNode::Node { kind, label, children } => Term::node(
            *kind,
            label.clone(),
            children.iter().map(|c| rename_term(c, map)).collect(),
        ),
    };
    out.pos_var = t
        .pos_var
        .as_ref()
        .map(|p| map.get(p).cloned().unwrap_or_else(|| p.clone()));
    out
}

fn collect_order(elements: &[PatternElem], order: &mut Vec<String>) {
    fn push(order: &mut Vec<String>, refs: Vec<String>) {
        for r in refs {
            if !order.contains(&r) {
                order.push(r);
            }
        }
    }
    for e in elements {
        match &e.body {
            ElemBody::Minus(t) | ElemBody::Context(t) => {
                let mut refs = Vec::new();
                t.metavar_refs(&mut refs);
                push(order, refs);
            }
            ElemBody::Plus(p) => {
                let mut refs = Vec::new();
                p.term.metavar_refs(&mut refs);
                push(order, refs);
            }
            ElemBody::Dots(cs) => {
                for c in cs {
                    if let WhenClause::NotMatch(t) = c {
                        let mut refs = Vec::new();
                        t.metavar_refs(&mut refs);
                        push(order, refs);
                    }
                }
            }
            ElemBody::Disjunction(bs) => {
                for b in bs {
                    collect_order(b, order);
                }
            }
        }
    }
}

fn rename_elements(
    elements: &[PatternElem],
    map: &std::collections::BTreeMap<String, String>,
) -> Vec<PatternElem> {
    elements
        .iter()
        .map(|e| {
            let body = match &e.body {
                ElemBody::Minus(t) => ElemBody::Minus(rename_term(t, map)),
                ElemBody::Context(t) => ElemBody::Context(rename_term(t, map)),
                ElemBody::Plus(p) => ElemBody::Plus(PlusTerm {
                    term: rename_term(&p.term, map),
                    rel_indent: p.rel_indent,
                }),
                ElemBody::Dots(cs) => ElemBody::Dots(
                    cs.iter()
                        .map(|c| match c {
                            WhenClause::Any => WhenClause::Any,
                            WhenClause::NotMatch(t) => WhenClause::NotMatch(rename_term(t, map)),
                        })
                        .collect(),
                ),
                ElemBody::Disjunction(bs) => {
                    ElemBody::Disjunction(bs.iter().map(|b| rename_elements(b, map)).collect())
                }
            };
            PatternElem::new(body)
        })
        .collect()
}

/// Canonical text of a rule with metavariables renamed in first-reference
/// order; two rules equal up to renaming have equal canonical forms.
pub fn canonical_rule_form(rule: &GenericPatchRule) -> String {
    let mut order = Vec::new();
    collect_order(&rule.elements, &mut order);
    let mut map = std::collections::BTreeMap::new();
    for (i, name) in order.iter().enumerate() {
        map.insert(name.clone(), format!("m{i}"));
    }
    let renamed = GenericPatchRule {
        name: "canonical".into(),
        quantifier: rule.quantifier,
        metavars: rule
            .metavars
            .iter()
            .filter(|d| order.contains(&d.name))
            .map(|d| MetavarDecl {
                name: map[&d.name].clone(),
                kind: d.kind,
            })
            .collect(),
        header: rule.header.clone(),
        elements: rename_elements(&rule.elements, &map),
    };
    let gp = genpatch_core::patlang::GenericPatch::single("canonical", vec![renamed]);
    genpatch_core::patlang::render_generic_patch(&gp)
}
