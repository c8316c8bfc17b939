//! Pattern terms: MiniC statement/expression templates whose leaves may be
//! metavariable references, optionally carrying a position annotation (`@p`).
//!
//! Terms are parsed by lexing the template text, stripping `@p` annotations,
//! and running the MiniC fragment parser; identifiers that name a declared
//! metavariable become `Metavar` leaves. Rendering is precedence-aware so an
//! instantiated term never changes its parse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minic::lex::{tokenize, Token, TokenKind};
use crate::minic::{parse_fragment, AstNode, AstUnit, Fragment, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetavarKind {
    Type,
    Identifier,
    Expression,
    Statement,
    Constant,
    Parameter,
    Position,
}

impl MetavarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MetavarKind::Type => "type",
            MetavarKind::Identifier => "identifier",
            MetavarKind::Expression => "expression",
            MetavarKind::Statement => "statement",
            MetavarKind::Constant => "constant",
            MetavarKind::Parameter => "parameter",
            MetavarKind::Position => "position",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "type" => MetavarKind::Type,
            "identifier" => MetavarKind::Identifier,
            "expression" => MetavarKind::Expression,
            "statement" => MetavarKind::Statement,
            "constant" => MetavarKind::Constant,
            "parameter" => MetavarKind::Parameter,
            "position" => MetavarKind::Position,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetavarDecl {
    pub name: String,
    pub kind: MetavarKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermNode {
    /// Concrete syntax mirroring the MiniC AST shape.
    Node {
        kind: NodeKind,
        label: String,
        children: Vec<Term>,
    },
    /// Occurrence of a declared (or implicitly fresh) metavariable.
    Metavar { name: String, kind: MetavarKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub node: TermNode,
    /// Position metavariable bound to this term's first matched token.
    pub pos_var: Option<String>,
}

impl Term {
    pub fn node(kind: NodeKind, label: impl Into<String>, children: Vec<Term>) -> Term {
        Term {
            node: TermNode::Node {
                kind,
                label: label.into(),
                children,
            },
            pos_var: None,
        }
    }

    pub fn metavar(name: impl Into<String>, kind: MetavarKind) -> Term {
        Term {
            node: TermNode::Metavar {
                name: name.into(),
                kind,
            },
            pos_var: None,
        }
    }

    pub fn kind(&self) -> Option<NodeKind> {
        match &self.node {
            TermNode::Node { kind, .. } => Some(*kind),
            TermNode::Metavar { .. } => None,
        }
    }

    /// Statement-shaped terms match whole CFG nodes; everything else embeds
    /// as a subterm.
    pub fn is_statement(&self) -> bool {
        match &self.node {
            TermNode::Node { kind, .. } => kind.is_stmt(),
            TermNode::Metavar { kind, .. } => *kind == MetavarKind::Statement,
        }
    }

    /// All metavariable names referenced anywhere in the term.
    pub fn metavar_refs(&self, out: &mut Vec<String>) {
        if let Some(p) = &self.pos_var {
            out.push(p.clone());
        }
        match &self.node {
            TermNode::Metavar { name, .. } => out.push(name.clone()),
            TermNode::Node { children, .. } => {
                for c in children {
                    c.metavar_refs(out);
                }
            }
        }
    }

    pub fn has_position(&self) -> bool {
        if self.pos_var.is_some() {
            return true;
        }
        match &self.node {
            TermNode::Node { children, .. } => children.iter().any(|c| c.has_position()),
            TermNode::Metavar { .. } => false,
        }
    }

    /// Snapshot of a concrete AST subtree as a term (no metavariables).
    pub fn from_ast(unit: &AstUnit, id: NodeId) -> Term {
        let n: &AstNode = unit.node(id);
        Term::node(
            n.kind,
            n.label.clone(),
            n.children.iter().map(|&c| Term::from_ast(unit, c)).collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn find(decls: &[MetavarDecl], name: &str) -> Option<MetavarKind> {
    decls.iter().find(|d| d.name == name).map(|d| d.kind)
}

/// Strip `@name` annotations from a token list, recording the index of the
/// token each annotation follows.
fn strip_positions(tokens: Vec<Token>) -> Result<(Vec<Token>, Vec<(usize, String)>)> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut pos: Vec<(usize, String)> = Vec::new();
    let mut it = tokens.into_iter().peekable();
    while let Some(t) = it.next() {
        if t.lexeme == "@" {
            let name = it.next().filter(|n| n.kind == TokenKind::Ident).ok_or_else(|| {
                Error::PatternSyntax {
                    file: String::new(),
                    line: t.line,
                    col: t.col,
                    msg: "`@` must be followed by a position metavariable name".into(),
                }
            })?;
            if out.is_empty() {
                return Err(Error::PatternSyntax {
                    file: String::new(),
                    line: t.line,
                    col: t.col,
                    msg: "`@` has no preceding token to annotate".into(),
                });
            }
            pos.push((out.len() - 1, name.lexeme));
        } else {
            out.push(t);
        }
    }
    Ok((out, pos))
}

struct Converter<'a> {
    nodes: &'a [AstNode],
    decls: &'a [MetavarDecl],
    positions: Vec<(usize, String, bool)>,
}

impl<'a> Converter<'a> {
    fn convert(&mut self, id: NodeId) -> Term {
        let n = &self.nodes[id];
        let mut term = match n.kind {
            NodeKind::Identifier => match find(self.decls, &n.label) {
                Some(MetavarKind::Position) | None => {
                    Term::node(NodeKind::Identifier, n.label.clone(), vec![])
                }
                Some(kind) => Term::metavar(n.label.clone(), kind),
            },
            // an expression statement wrapping a lone statement metavariable
            // collapses to the metavariable itself (see `insert_stmt_semis`)
            NodeKind::ExprStmt if n.children.len() == 1 => {
                let inner = self.convert(n.children[0]);
                if matches!(
                    &inner.node,
                    TermNode::Metavar { kind: MetavarKind::Statement, .. }
                ) {
                    inner
                } else {
                    Term::node(n.kind, n.label.clone(), vec![inner])
                }
            }
            _ => {
                let children = n.children.iter().map(|&c| self.convert(c)).collect();
                Term::node(n.kind, n.label.clone(), children)
            }
        };
        // Attach the position annotation to the deepest term ending at the
        // annotated token; children run first, so they claim before parents.
        for p in self.positions.iter_mut() {
            if !p.2 && p.0 + 1 == n.tok_end && p.0 >= n.tok_start {
                if n.children.is_empty() || self.nodes[*n.children.last().unwrap()].tok_end != n.tok_end
                {
                    p.2 = true;
                    term.pos_var = Some(p.1.clone());
                }
            }
        }
        term
    }
}

fn tokens_of(text: &str) -> Result<Vec<Token>> {
    Ok(tokenize(text, "<pattern>")?.tokens)
}

/// Try to parse a declaration template headed by a type metavariable:
/// `T x`, `T *x = E` and friends.
fn parse_metavar_decl_stmt(tokens: &[Token], decls: &[MetavarDecl]) -> Option<Term> {
    let first = tokens.first()?;
    let tkind = find(decls, &first.lexeme)?;
    if tkind != MetavarKind::Type {
        return None;
    }
    let mut i = 1;
    let mut ty = Term::metavar(first.lexeme.clone(), MetavarKind::Type);
    while tokens.get(i).map(|t| t.lexeme == "*").unwrap_or(false) {
        ty = Term::node(NodeKind::PointerType, "*", vec![ty]);
        i += 1;
    }
    let name_tok = tokens.get(i)?;
    if name_tok.kind != TokenKind::Ident {
        return None;
    }
    let name = match find(decls, &name_tok.lexeme) {
        Some(MetavarKind::Identifier) => Term::metavar(name_tok.lexeme.clone(), MetavarKind::Identifier),
        None => Term::node(NodeKind::Identifier, name_tok.lexeme.clone(), vec![]),
        Some(_) => return None,
    };
    i += 1;
    let mut children = vec![ty, name];
    if tokens.get(i).map(|t| t.lexeme == "=").unwrap_or(false) {
        i += 1;
        let rest = &tokens[i..tokens.len()];
        let rest = rest.strip_suffix_semicolon()?;
        let (nodes, root) = parse_fragment(rest, Fragment::Expr)?;
        let mut conv = Converter {
            nodes: &nodes,
            decls,
            positions: Vec::new(),
        };
        children.push(conv.convert(root));
        return Some(Term::node(NodeKind::DeclStmt, "", children));
    }
    if tokens.get(i).map(|t| t.lexeme == ";").unwrap_or(false) && i + 1 == tokens.len() {
        return Some(Term::node(NodeKind::DeclStmt, "", children));
    }
    None
}

trait TokenSliceExt {
    fn strip_suffix_semicolon(&self) -> Option<&[Token]>;
}

impl TokenSliceExt for [Token] {
    fn strip_suffix_semicolon(&self) -> Option<&[Token]> {
        match self.last() {
            Some(t) if t.lexeme == ";" => Some(&self[..self.len() - 1]),
            _ => None,
        }
    }
}

const STMT_KEYWORDS: &[&str] = &["if", "while", "for", "return", "break", "continue"];

/// A statement metavariable used as a sub-statement (`if (E) S`) needs a
/// synthetic `;` so the MiniC fragment parser can treat it as a statement;
/// the converter collapses the wrapper again. Position indices are remapped.
fn insert_stmt_semis(
    tokens: Vec<Token>,
    positions: Vec<(usize, String)>,
    decls: &[MetavarDecl],
) -> (Vec<Token>, Vec<(usize, String)>) {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut new_index = Vec::with_capacity(tokens.len());
    let len = tokens.len();
    for (k, t) in tokens.iter().enumerate() {
        let is_stmt_mv =
            t.kind == TokenKind::Ident && find(decls, &t.lexeme) == Some(MetavarKind::Statement);
        let next_is_semi = tokens.get(k + 1).map(|n| n.lexeme == ";").unwrap_or(false);
        let (line, col) = (t.line, t.col);
        out.push(t.clone());
        new_index.push(out.len() - 1);
        if is_stmt_mv && !next_is_semi {
            out.push(Token {
                kind: TokenKind::Punct,
                lexeme: ";".into(),
                line,
                col,
                trivia: String::new(),
            });
        }
        let _ = len;
    }
    let positions = positions
        .into_iter()
        .map(|(idx, name)| (new_index[idx], name))
        .collect();
    (out, positions)
}

/// Parse a minus/context term: a full statement (keyword-led or
/// `;`-terminated), a lone statement metavariable, or an expression.
pub fn parse_term(text: &str, decls: &[MetavarDecl]) -> Result<Term> {
    let err = |line: u32, col: u32, msg: String| Error::PatternSyntax {
        file: String::new(),
        line,
        col,
        msg,
    };
    let raw = tokens_of(text)?;
    let (tokens, positions) = strip_positions(raw)?;
    if tokens.is_empty() {
        return Err(err(0, 0, "empty term".into()));
    }
    // lone statement metavariable
    if tokens.len() == 1 {
        if let Some(MetavarKind::Statement) = find(decls, &tokens[0].lexeme) {
            return Ok(Term::metavar(tokens[0].lexeme.clone(), MetavarKind::Statement));
        }
    }
    if let Some(t) = parse_metavar_decl_stmt(&tokens, decls) {
        return Ok(t);
    }
    let (tokens, positions) = insert_stmt_semis(tokens, positions, decls);
    let first = &tokens[0];
    let stmt_like = STMT_KEYWORDS.contains(&first.lexeme.as_str())
        || first.lexeme == "{"
        || tokens.last().map(|t| t.lexeme == ";").unwrap_or(false)
        || (first.kind == TokenKind::Keyword && find(decls, &first.lexeme).is_none());
    let frag = if stmt_like { Fragment::Stmt } else { Fragment::Expr };
    let (nodes, root) = parse_fragment(&tokens, frag).ok_or_else(|| {
        err(
            first.line,
            first.col,
            format!("cannot parse term {text:?} as a MiniC template"),
        )
    })?;
    let mut conv = Converter {
        nodes: &nodes,
        decls,
        positions: positions.iter().map(|(i, n)| (*i, n.clone(), false)).collect(),
    };
    let term = conv.convert(root);
    if let Some(p) = conv.positions.iter().find(|p| !p.2) {
        return Err(err(0, 0, format!("position annotation @{} attaches to nothing", p.1)));
    }
    Ok(term)
}

/// Parse a plus-line term. Accepts everything `parse_term` does, plus the
/// open forms `return` (no semicolon, no value) and `if (expr)` (no body),
/// and statements with the final `;` left off.
pub fn parse_plus_term(text: &str, decls: &[MetavarDecl]) -> Result<Term> {
    let raw = tokens_of(text)?;
    let (tokens, positions) = strip_positions(raw)?;
    if !positions.is_empty() {
        return Err(Error::PatternSyntax {
            file: String::new(),
            line: 0,
            col: 0,
            msg: "position annotations are not allowed on `+` lines".into(),
        });
    }
    if tokens.len() == 1 && tokens[0].lexeme == "return" {
        return Ok(Term::node(NodeKind::ReturnStmt, "", vec![]));
    }
    // open if-header: `if ( ... )` consuming everything
    if tokens.first().map(|t| t.lexeme == "if").unwrap_or(false)
        && tokens.get(1).map(|t| t.lexeme == "(").unwrap_or(false)
        && tokens.last().map(|t| t.lexeme == ")").unwrap_or(false)
    {
        let inner = &tokens[2..tokens.len() - 1];
        if let Some((nodes, root)) = parse_fragment(inner, Fragment::Expr) {
            let mut conv = Converter {
                nodes: &nodes,
                decls,
                positions: Vec::new(),
            };
            let cond = conv.convert(root);
            return Ok(Term::node(NodeKind::IfStmt, "", vec![cond]));
        }
    }
    if let Ok(t) = parse_term(text, decls) {
        // A bare assignment on a plus line is a statement; other bare
        // expressions stay expressions so they can splice into a minus site.
        let assign_root = matches!(
            &t.node,
            TermNode::Node { kind: NodeKind::AssignExpr, .. }
        );
        if !assign_root {
            return Ok(t);
        }
    }
    // retry with a trailing semicolon: `return E`, `x = 1`
    let mut amended = text.trim_end().to_string();
    amended.push(';');
    parse_term(&amended, decls)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn op_prec(label: &str) -> u8 {
    match label {
        "||" => 2,
        "&&" => 3,
        "|" => 4,
        "^" => 5,
        "&" => 6,
        "==" | "!=" => 7,
        "<" | "<=" | ">" | ">=" => 8,
        "<<" | ">>" => 9,
        "+" | "-" => 10,
        "*" | "/" | "%" => 11,
        _ => 0,
    }
}

fn term_prec(t: &Term) -> u8 {
    match &t.node {
        TermNode::Metavar { .. } => 14,
        TermNode::Node { kind, label, .. } => match kind {
            NodeKind::AssignExpr => 1,
            NodeKind::BinaryExpr => op_prec(label),
            NodeKind::UnaryExpr => 12,
            NodeKind::CallExpr | NodeKind::FieldAccess | NodeKind::IndexExpr => 13,
            _ => 14,
        },
    }
}

fn child(t: &Term, i: usize) -> &Term {
    match &t.node {
        TermNode::Node { children, .. } => &children[i],
        TermNode::Metavar { .. } => unreachable!("metavar has no children"),
    }
}

fn render_with_min_prec(t: &Term, min: u8, out: &mut String) {
    if term_prec(t) < min {
        out.push('(');
        render_expr(t, out);
        out.push(')');
    } else {
        render_expr(t, out);
    }
}

fn render_expr(t: &Term, out: &mut String) {
    let suffix = |out: &mut String, t: &Term| {
        if let Some(p) = &t.pos_var {
            out.push('@');
            out.push_str(p);
        }
    };
    match &t.node {
        TermNode::Metavar { name, .. } => {
            out.push_str(name);
            suffix(out, t);
        }
        TermNode::Node { kind, label, children } => {
            match kind {
                NodeKind::Identifier | NodeKind::Literal | NodeKind::TypeName => out.push_str(label),
                NodeKind::PointerType => {
                    render_expr(&children[0], out);
                    out.push_str(" *");
                }
                NodeKind::BinaryExpr => {
                    let p = op_prec(label);
                    render_with_min_prec(child(t, 0), p, out);
                    out.push(' ');
                    out.push_str(label);
                    out.push(' ');
                    render_with_min_prec(child(t, 1), p + 1, out);
                }
                NodeKind::AssignExpr => {
                    render_with_min_prec(child(t, 0), 2, out);
                    out.push(' ');
                    out.push_str(label);
                    out.push(' ');
                    render_with_min_prec(child(t, 1), 1, out);
                }
                NodeKind::UnaryExpr => {
                    if let Some(op) = label.strip_prefix("post") {
                        render_with_min_prec(child(t, 0), 13, out);
                        out.push_str(op);
                    } else {
                        out.push_str(label);
                        render_with_min_prec(child(t, 0), 12, out);
                    }
                }
                NodeKind::CallExpr => {
                    render_with_min_prec(child(t, 0), 13, out);
                    out.push('(');
                    for (i, a) in children.iter().enumerate().skip(1) {
                        if i > 1 {
                            out.push_str(", ");
                        }
                        render_expr(a, out);
                    }
                    out.push(')');
                }
                NodeKind::FieldAccess => {
                    render_with_min_prec(child(t, 0), 13, out);
                    out.push_str(label);
                    render_expr(&children[1], out);
                }
                NodeKind::IndexExpr => {
                    render_with_min_prec(child(t, 0), 13, out);
                    out.push('[');
                    if children.len() > 1 {
                        render_expr(&children[1], out);
                    }
                    out.push(']');
                }
                _ => render_stmt_inline(t, out),
            }
            suffix(out, t);
        }
    }
}

fn render_type_and_name(ty: &Term, name: &Term, out: &mut String) {
    let mut t = String::new();
    render_expr(ty, &mut t);
    out.push_str(&t);
    if !t.ends_with('*') {
        out.push(' ');
    }
    render_expr(name, out);
}

fn render_stmt_inline(t: &Term, out: &mut String) {
    match &t.node {
        TermNode::Metavar { name, .. } => out.push_str(name),
        TermNode::Node { kind, label, children } => match kind {
            NodeKind::ExprStmt => {
                render_expr(&children[0], out);
                out.push(';');
            }
            NodeKind::DeclStmt => {
                render_type_and_name(&children[0], &children[1], out);
                let mut i = 2;
                while i < children.len() {
                    out.push_str(" = ");
                    render_expr(&children[i], out);
                    i += 1;
                }
                out.push(';');
            }
            NodeKind::ReturnStmt => {
                out.push_str("return");
                if let Some(e) = children.first() {
                    out.push(' ');
                    render_expr(e, out);
                }
                out.push(';');
            }
            NodeKind::BreakStmt => out.push_str("break;"),
            NodeKind::ContinueStmt => out.push_str("continue;"),
            NodeKind::IfStmt => {
                out.push_str("if (");
                render_expr(&children[0], out);
                out.push(')');
                if let Some(then) = children.get(1) {
                    out.push(' ');
                    render_stmt_inline(then, out);
                }
                if let Some(els) = children.get(2) {
                    out.push_str(" else ");
                    render_stmt_inline(els, out);
                }
            }
            NodeKind::WhileStmt => {
                out.push_str("while (");
                render_expr(&children[0], out);
                out.push_str(") ");
                render_stmt_inline(&children[1], out);
            }
            NodeKind::ForStmt => {
                out.push_str("for (");
                let init = &children[0];
                let mut init_text = String::new();
                render_stmt_inline_or_expr(init, &mut init_text);
                out.push_str(init_text.trim_end_matches(';'));
                out.push_str("; ");
                render_expr(&children[1], out);
                out.push_str("; ");
                render_expr(&children[2], out);
                out.push_str(") ");
                render_stmt_inline(&children[3], out);
            }
            NodeKind::CompoundStmt => {
                out.push('{');
                for c in children {
                    out.push(' ');
                    render_stmt_inline(c, out);
                }
                out.push_str(" }");
            }
            NodeKind::OpaqueStmt => out.push_str(label),
            _ => render_expr(t, out),
        },
    }
    if let Some(p) = &t.pos_var {
        out.push('@');
        out.push_str(p);
    }
}

fn render_stmt_inline_or_expr(t: &Term, out: &mut String) {
    match t.kind() {
        Some(k) if k.is_stmt() => render_stmt_inline(t, out),
        _ => render_expr(t, out),
    }
}

/// Canonical single-line rendering of a term.
pub fn render_term(t: &Term) -> String {
    let mut out = String::new();
    render_stmt_inline_or_expr(t, &mut out);
    out
}

/// Render the open plus forms: an `if` header without a body and a bare
/// `return` keep their open shape (the body follows on the next plus line).
pub fn render_plus_term(t: &Term) -> String {
    match &t.node {
        TermNode::Node { kind: NodeKind::IfStmt, children, .. } if children.len() == 1 => {
            let mut out = String::from("if (");
            render_expr(&children[0], &mut out);
            out.push(')');
            out
        }
        _ => render_term(t),
    }
}
