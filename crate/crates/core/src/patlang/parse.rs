//! Parser for the pattern file format.

use crate::error::{Error, Result};
use crate::minic::lex::{tokenize, Token, TokenKind};
use crate::util::short_id;

use super::term::{parse_plus_term, parse_term, MetavarDecl, MetavarKind, Term, TermNode};
use super::{
    validate, ElemBody, GenericPatch, GenericPatchRule, HeaderPattern, ParamPattern, PatternElem,
    PlusTerm, Quantifier, Severity, Slot, WhenClause,
};

fn syntax_err(line: u32, msg: impl Into<String>) -> Error {
    Error::PatternSyntax {
        file: String::new(),
        line,
        col: 1,
        msg: msg.into(),
    }
}

struct RuleBlock {
    name: String,
    quantifier: Quantifier,
    header_line: u32,
    decl_lines: Vec<(u32, String)>,
    body_lines: Vec<(u32, String)>,
}

fn is_rule_header(line: &str) -> bool {
    let t = line.trim();
    t.len() > 2 && t.starts_with('@') && t.ends_with('@') && t != "@@" && !t.contains("@@")
}

fn split_blocks(text: &str) -> Result<Vec<RuleBlock>> {
    let mut blocks: Vec<RuleBlock> = Vec::new();
    let mut in_decls = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = (i + 1) as u32;
        let trimmed = raw.trim();
        if is_rule_header(trimmed) {
            let inner = &trimmed[1..trimmed.len() - 1];
            let mut words = inner.split_whitespace();
            let name = words
                .next()
                .ok_or_else(|| syntax_err(lineno, "rule name missing"))?
                .to_string();
            let quantifier = match words.next() {
                None => Quantifier::Forall,
                Some("exists") => Quantifier::Exists,
                Some("forall") => Quantifier::Forall,
                Some(other) => {
                    return Err(syntax_err(lineno, format!("unknown rule annotation {other:?}")))
                }
            };
            blocks.push(RuleBlock {
                name,
                quantifier,
                header_line: lineno,
                decl_lines: Vec::new(),
                body_lines: Vec::new(),
            });
            in_decls = true;
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            if trimmed.is_empty() {
                continue;
            }
            return Err(syntax_err(lineno, "pattern text must start with `@name@`"));
        };
        if in_decls {
            if trimmed == "@@" {
                in_decls = false;
            } else if !trimmed.is_empty() {
                block.decl_lines.push((lineno, trimmed.to_string()));
            }
        } else {
            block.body_lines.push((lineno, raw.to_string()));
        }
    }
    if blocks.is_empty() {
        return Err(syntax_err(0, "no rules found"));
    }
    Ok(blocks)
}

fn parse_decls(lines: &[(u32, String)]) -> Result<Vec<MetavarDecl>> {
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let body = line
            .strip_suffix(';')
            .ok_or_else(|| syntax_err(*lineno, "metavariable declaration must end with `;`"))?;
        let mut words = body.split_whitespace();
        let kind_word = words
            .next()
            .ok_or_else(|| syntax_err(*lineno, "empty declaration"))?;
        let kind = MetavarKind::from_keyword(kind_word)
            .ok_or_else(|| syntax_err(*lineno, format!("unknown metavariable kind {kind_word:?}")))?;
        let names: String = words.collect::<Vec<_>>().join(" ");
        if names.is_empty() {
            return Err(syntax_err(*lineno, "declaration names no metavariables"));
        }
        for name in names.split(',') {
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(syntax_err(*lineno, format!("bad metavariable name {name:?}")));
            }
            out.push(MetavarDecl {
                name: name.to_string(),
                kind,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Header template
// ---------------------------------------------------------------------------

fn slot_of(tok: &Token, decls: &[MetavarDecl], want: MetavarKind) -> Slot {
    match decls.iter().find(|d| d.name == tok.lexeme) {
        Some(d) if d.kind == want => Slot::Metavar(tok.lexeme.clone()),
        _ => Slot::Concrete(tok.lexeme.clone()),
    }
}

/// Try to read a line as a function-header template: `name(params){`.
fn try_parse_header(line: &str, lineno: u32, decls: &[MetavarDecl]) -> Result<Option<HeaderPattern>> {
    let trimmed = line.trim();
    if !trimmed.ends_with('{') {
        return Ok(None);
    }
    let toks = match tokenize(trimmed, "<pattern>") {
        Ok(ts) => ts.tokens,
        Err(_) => return Ok(None),
    };
    if toks.len() < 4 {
        return Ok(None);
    }
    if toks[0].kind != TokenKind::Ident
        || toks[1].lexeme != "("
        || toks[toks.len() - 1].lexeme != "{"
        || toks[toks.len() - 2].lexeme != ")"
    {
        return Ok(None);
    }
    let name = slot_of(&toks[0], decls, MetavarKind::Identifier);
    let inner = &toks[2..toks.len() - 2];

    let mut items: Vec<Vec<Token>> = vec![Vec::new()];
    let mut depth = 0i32;
    for t in inner {
        match t.lexeme.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "," if depth == 0 => {
                items.push(Vec::new());
                continue;
            }
            _ => {}
        }
        items.last_mut().unwrap().push(t.clone());
    }
    if items.len() == 1 && items[0].is_empty() {
        items.clear();
    }

    let mut params = Vec::new();
    for item in items {
        if item.is_empty() {
            return Err(syntax_err(lineno, "empty parameter slot in header"));
        }
        if item.len() == 1 && item[0].lexeme == "..." {
            params.push(ParamPattern::Dots);
            continue;
        }
        if item.len() == 1 && item[0].kind == TokenKind::Ident {
            if let Some(d) = decls.iter().find(|d| d.name == item[0].lexeme) {
                if d.kind == MetavarKind::Parameter {
                    params.push(ParamPattern::Whole(item[0].lexeme.clone()));
                    continue;
                }
            }
        }
        // type tokens, stars, then the parameter name
        let name_tok = item
            .last()
            .filter(|t| t.kind == TokenKind::Ident)
            .ok_or_else(|| syntax_err(lineno, "parameter template must end with a name"))?;
        let mut rest = &item[..item.len() - 1];
        let mut stars = 0;
        while let Some(t) = rest.last() {
            if t.lexeme == "*" {
                stars += 1;
                rest = &rest[..rest.len() - 1];
            } else {
                break;
            }
        }
        if rest.is_empty() {
            return Err(syntax_err(lineno, "parameter template is missing its type"));
        }
        let ty = if rest.len() == 1 && rest[0].kind == TokenKind::Ident {
            slot_of(&rest[0], decls, MetavarKind::Type)
        } else {
            Slot::Concrete(
                rest.iter()
                    .map(|t| t.lexeme.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            )
        };
        params.push(ParamPattern::Decl {
            ty,
            stars,
            name: slot_of(name_tok, decls, MetavarKind::Identifier),
        });
    }
    Ok(Some(HeaderPattern { name, params }))
}

// ---------------------------------------------------------------------------
// Body
// ---------------------------------------------------------------------------

/// `when != M = x` with an undeclared simple right-hand side: `x` becomes an
/// implicitly fresh expression metavariable.
fn freshen_when_term(t: &mut Term, decls: &[MetavarDecl]) {
    use crate::minic::NodeKind;
    if let TermNode::Node { kind: NodeKind::AssignExpr, children, .. } = &mut t.node {
        let lhs_is_metavar = matches!(children[0].node, TermNode::Metavar { .. });
        if lhs_is_metavar {
            if let TermNode::Node { kind: NodeKind::Identifier, label, .. } = &children[1].node {
                if !decls.iter().any(|d| d.name == *label) {
                    children[1] = Term::metavar(label.clone(), MetavarKind::Expression);
                }
            }
        }
    }
}

fn parse_when_clause(text: &str, lineno: u32, decls: &[MetavarDecl]) -> Result<WhenClause> {
    let rest = text.trim();
    if rest == "any" {
        return Ok(WhenClause::Any);
    }
    if let Some(term_text) = rest.strip_prefix("!=") {
        if term_text.trim_start().starts_with('+') {
            return Err(syntax_err(lineno, "`+` lines are not allowed inside `when`"));
        }
        let mut term = parse_term(term_text.trim(), decls)
            .map_err(|e| syntax_err(lineno, format!("bad `when` term: {e}")))?;
        freshen_when_term(&mut term, decls);
        return Ok(WhenClause::NotMatch(term));
    }
    Err(syntax_err(lineno, format!("unsupported `when` form: {rest:?}")))
}

struct BodyParser<'a> {
    decls: &'a [MetavarDecl],
}

impl<'a> BodyParser<'a> {
    fn parse(&self, lines: &[(u32, String)]) -> Result<Vec<PatternElem>> {
        let mut elems: Vec<PatternElem> = Vec::new();
        let mut i = 0;
        while i < lines.len() {
            let (lineno, raw) = &lines[i];
            let lineno = *lineno;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                i += 1;
                continue;
            }
            if trimmed.contains("<...") || trimmed.contains("...>") || trimmed.contains("<+...") {
                return Err(Error::UnsupportedConstruct {
                    file: String::new(),
                    line: lineno,
                    msg: "nests (`<... ...>`) are not part of the supported subset".into(),
                });
            }
            if trimmed == "(" {
                let (elem, next) = self.parse_disjunction(lines, i)?;
                elems.push(elem);
                i = next;
                continue;
            }
            match trimmed.as_bytes()[0] {
                b'-' => {
                    let content = trimmed[1..].trim();
                    if content == "..." || content.starts_with("... ") {
                        return Err(syntax_err(lineno, "removing `...` is not supported"));
                    }
                    let term = parse_term(content, self.decls)?;
                    elems.push(PatternElem {
                        body: ElemBody::Minus(term),
                        line: lineno,
                    });
                }
                b'+' => {
                    let after = &raw[raw.find('+').unwrap() + 1..];
                    let indent = after.len() - after.trim_start().len();
                    let term = parse_plus_term(after.trim(), self.decls)?;
                    elems.push(PatternElem {
                        body: ElemBody::Plus(PlusTerm {
                            term,
                            rel_indent: indent,
                        }),
                        line: lineno,
                    });
                }
                _ if trimmed == "..." || trimmed.starts_with("... ") => {
                    let mut clauses = Vec::new();
                    let rest = trimmed[3..].trim();
                    if !rest.is_empty() {
                        let w = rest.strip_prefix("when").ok_or_else(|| {
                            syntax_err(lineno, "only `when` clauses may follow `...`")
                        })?;
                        clauses.push(parse_when_clause(w, lineno, self.decls)?);
                    }
                    // continuation `when` lines
                    while i + 1 < lines.len() {
                        let (nln, nraw) = &lines[i + 1];
                        let t = nraw.trim();
                        if let Some(w) = t.strip_prefix("when") {
                            clauses.push(parse_when_clause(w, *nln, self.decls)?);
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    elems.push(PatternElem {
                        body: ElemBody::Dots(clauses),
                        line: lineno,
                    });
                }
                _ if trimmed.starts_with("when") => {
                    return Err(syntax_err(lineno, "`when` without a preceding `...`"));
                }
                _ => {
                    let term = parse_term(trimmed, self.decls)?;
                    elems.push(PatternElem {
                        body: ElemBody::Context(term),
                        line: lineno,
                    });
                }
            }
            i += 1;
        }
        // normalize plus-block indentation to be relative to the block start
        let mut j = 0;
        while j < elems.len() {
            if elems[j].is_plus() {
                let mut k = j;
                while k < elems.len() && elems[k].is_plus() {
                    k += 1;
                }
                let base = (j..k)
                    .map(|x| match &elems[x].body {
                        ElemBody::Plus(p) => p.rel_indent,
                        _ => unreachable!(),
                    })
                    .min()
                    .unwrap_or(0);
                for e in elems[j..k].iter_mut() {
                    if let ElemBody::Plus(p) = &mut e.body {
                        p.rel_indent -= base;
                    }
                }
                j = k;
            } else {
                j += 1;
            }
        }
        Ok(elems)
    }

    fn parse_disjunction(
        &self,
        lines: &[(u32, String)],
        open: usize,
    ) -> Result<(PatternElem, usize)> {
        let open_line = lines[open].0;
        let mut branches: Vec<Vec<(u32, String)>> = vec![Vec::new()];
        let mut i = open + 1;
        let mut depth = 1;
        while i < lines.len() {
            let t = lines[i].1.trim();
            match t {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        let parsed: Result<Vec<Vec<PatternElem>>> =
                            branches.iter().map(|b| self.parse(b)).collect();
                        return Ok((
                            PatternElem {
                                body: ElemBody::Disjunction(parsed?),
                                line: open_line,
                            },
                            i + 1,
                        ));
                    }
                }
                "|" if depth == 1 => {
                    branches.push(Vec::new());
                    i += 1;
                    continue;
                }
                _ => {}
            }
            branches.last_mut().unwrap().push(lines[i].clone());
            i += 1;
        }
        Err(syntax_err(open_line, "unterminated disjunction"))
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse pattern text into a validated model. Validation errors (not
/// warnings) fail the parse.
pub fn parse_generic_patch(text: &str) -> Result<GenericPatch> {
    let blocks = split_blocks(text)?;
    let mut rules = Vec::new();
    for block in blocks {
        let decls = parse_decls(&block.decl_lines)?;

        // header template: first significant body line ending with `{`,
        // closed by a final `}` line
        let mut body = block.body_lines.clone();
        let mut header = None;
        let first_sig = body.iter().position(|(_, l)| !l.trim().is_empty());
        if let Some(fi) = first_sig {
            if let Some(h) = try_parse_header(&body[fi].1, body[fi].0, &decls)? {
                let last_sig = body.iter().rposition(|(_, l)| !l.trim().is_empty()).unwrap();
                if body[last_sig].1.trim() != "}" {
                    return Err(syntax_err(
                        body[fi].0,
                        "function-header template is never closed by `}`",
                    ));
                }
                header = Some(h);
                body = body[fi + 1..last_sig].to_vec();
            }
        }

        let parser = BodyParser { decls: &decls };
        let elements = parser.parse(&body)?;
        rules.push(GenericPatchRule {
            name: block.name,
            quantifier: block.quantifier,
            metavars: decls,
            header,
            elements,
        });
        let _ = block.header_line;
    }

    let gp = GenericPatch::single(short_id(text.as_bytes()), rules);
    let errors: Vec<String> = validate(&gp)
        .into_iter()
        .filter(|i| i.severity == Severity::Error)
        .map(|i| i.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(Error::PatternInvalid(errors.join("; ")));
    }
    Ok(gp)
}
