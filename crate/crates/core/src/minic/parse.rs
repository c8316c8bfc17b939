//! Recursive-descent parser for MiniC.
//!
//! The parser never fails on a file: any region it cannot analyze (including
//! every preprocessor line) becomes an `OpaqueStmt` that keeps the raw tokens,
//! so mining over real-world diffs degrades instead of aborting.
//!
//! Grammar scope: function definitions; scalar/pointer/struct-reference
//! types; declarations with optional initializers; expression statements;
//! if/else, while, for (all three clauses required), return, break, continue;
//! expressions with assignment, binary and unary operators, calls, `->`/`.`
//! field access and indexing, with standard C precedence. Declarations must
//! start with a type keyword; typedef names are not resolved.

use super::ast::{AstNode, AstUnit, NodeId, NodeKind};
use super::lex::{tokenize, Token, TokenKind};

/// Internal backtracking signal; not an error the caller ever sees.
struct Fail;
type PResult<T> = std::result::Result<T, Fail>;

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "struct",
    "union", "enum", "const", "static", "extern", "volatile", "register", "inline",
];

const TYPE_BASES: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
];

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    nodes: Vec<AstNode>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.toks.get(self.pos + off)
    }

    fn at_lexeme(&self, s: &str) -> bool {
        self.peek().map(|t| t.lexeme == s).unwrap_or(false)
    }

    fn eat(&mut self, s: &str) -> PResult<()> {
        if self.at_lexeme(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn push(&mut self, kind: NodeKind, label: String, children: Vec<NodeId>, start: usize) -> NodeId {
        self.nodes.push(AstNode {
            kind,
            label,
            children,
            tok_start: start,
            tok_end: self.pos,
        });
        self.nodes.len() - 1
    }

    fn joined(&self, start: usize, end: usize) -> String {
        self.toks[start..end]
            .iter()
            .map(|t| t.lexeme.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    // -------------------------------------------------------------- opaque

    /// True when the current token starts a preprocessor line.
    fn at_pp_line(&self) -> bool {
        match self.peek() {
            Some(t) if t.lexeme == "#" => {
                self.pos == 0 || self.toks[self.pos - 1].line < t.line || t.trivia.contains('\n')
            }
            _ => false,
        }
    }

    /// Consume a whole preprocessor logical line (honoring `\` continuations).
    fn pp_opaque(&mut self) -> NodeId {
        let start = self.pos;
        let mut line = self.toks[self.pos].line;
        self.pos += 1;
        while let Some(t) = self.peek() {
            if t.line == line {
                self.pos += 1;
            } else if t.line == line + 1 && self.toks[self.pos - 1].lexeme == "\\" {
                line += 1;
                self.pos += 1;
            } else {
                break;
            }
        }
        let label = self.joined(start, self.pos);
        self.push(NodeKind::OpaqueStmt, label, Vec::new(), start)
    }

    /// Consume a malformed region: up to a `;` at depth zero (inclusive), a
    /// closing `}` of an entered brace group (inclusive), or a `}` belonging
    /// to the enclosing block (exclusive). Always makes progress.
    fn opaque_recover(&mut self, start: usize) -> NodeId {
        self.pos = start;
        let mut paren = 0i32;
        let mut brack = 0i32;
        let mut brace = 0i32;
        while let Some(t) = self.peek() {
            match t.lexeme.as_str() {
                "(" => paren += 1,
                ")" => paren -= 1,
                "[" => brack += 1,
                "]" => brack -= 1,
                "{" => brace += 1,
                "}" => {
                    if brace == 0 {
                        break; // enclosing block's brace
                    }
                    brace -= 1;
                    if brace == 0 && paren == 0 && brack == 0 {
                        self.pos += 1;
                        // struct definitions end with `};`
                        if self.at_lexeme(";") {
                            self.pos += 1;
                        }
                        break;
                    }
                }
                ";" if paren == 0 && brack == 0 && brace == 0 => {
                    self.pos += 1;
                    break;
                }
                _ => {}
            }
            self.pos += 1;
        }
        if self.pos == start {
            self.pos += 1; // never loop on a stray `}` at top level
        }
        let label = self.joined(start, self.pos);
        self.push(NodeKind::OpaqueStmt, label, Vec::new(), start)
    }

    // --------------------------------------------------------------- types

    fn at_type_start(&self) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && TYPE_KEYWORDS.contains(&t.lexeme.as_str()))
    }

    /// Base type specifier without pointer stars.
    fn type_spec(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut has_base = false;
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Keyword && TYPE_KEYWORDS.contains(&t.lexeme.as_str()) => {
                    let lex = t.lexeme.clone();
                    self.pos += 1;
                    if TYPE_BASES.contains(&lex.as_str()) {
                        has_base = true;
                    }
                    if matches!(lex.as_str(), "struct" | "union" | "enum") {
                        match self.peek() {
                            Some(t) if t.kind == TokenKind::Ident => {
                                self.pos += 1;
                                has_base = true;
                            }
                            _ => return Err(Fail), // anonymous aggregates are out of scope
                        }
                    }
                }
                _ => break,
            }
        }
        if !has_base || self.pos == start {
            self.pos = start;
            return Err(Fail);
        }
        let label = self.joined(start, self.pos);
        Ok(self.push(NodeKind::TypeName, label, Vec::new(), start))
    }

    /// Wrap `inner` in one `PointerType` per `*` consumed.
    fn pointer_stars(&mut self, mut inner: NodeId) -> NodeId {
        while self.at_lexeme("*") {
            let start = self.nodes[inner].tok_start;
            self.pos += 1;
            inner = self.push(NodeKind::PointerType, "*".into(), vec![inner], start);
        }
        inner
    }

    // ---------------------------------------------------------- expressions

    fn ident(&mut self) -> PResult<NodeId> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let label = t.lexeme.clone();
                let start = self.pos;
                self.pos += 1;
                Ok(self.push(NodeKind::Identifier, label, Vec::new(), start))
            }
            _ => Err(Fail),
        }
    }

    fn primary(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => self.ident(),
            Some(t)
                if matches!(t.kind, TokenKind::Number | TokenKind::Str | TokenKind::Char) =>
            {
                let label = t.lexeme.clone();
                self.pos += 1;
                Ok(self.push(NodeKind::Literal, label, Vec::new(), start))
            }
            Some(t) if t.lexeme == "(" => {
                self.pos += 1;
                let inner = self.assign_expr()?;
                self.eat(")")?;
                // Parentheses widen the inner node's token range; they add no
                // structure of their own.
                self.nodes[inner].tok_start = start;
                self.nodes[inner].tok_end = self.pos;
                Ok(inner)
            }
            _ => Err(Fail),
        }
    }

    fn postfix(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut node = self.primary()?;
        loop {
            match self.peek().map(|t| t.lexeme.as_str()) {
                Some("(") => {
                    self.pos += 1;
                    let mut children = vec![node];
                    if !self.at_lexeme(")") {
                        loop {
                            children.push(self.assign_expr()?);
                            if self.at_lexeme(",") {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.eat(")")?;
                    node = self.push(NodeKind::CallExpr, String::new(), children, start);
                }
                Some("[") => {
                    self.pos += 1;
                    let idx = self.assign_expr()?;
                    self.eat("]")?;
                    node = self.push(NodeKind::IndexExpr, String::new(), vec![node, idx], start);
                }
                Some(op @ ("->" | ".")) => {
                    let label = op.to_string();
                    self.pos += 1;
                    let field = self.ident()?;
                    node = self.push(NodeKind::FieldAccess, label, vec![node, field], start);
                }
                Some(op @ ("++" | "--")) => {
                    let label = format!("post{op}");
                    self.pos += 1;
                    node = self.push(NodeKind::UnaryExpr, label, vec![node], start);
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn unary(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        match self.peek().map(|t| t.lexeme.as_str()) {
            Some(op @ ("!" | "~" | "-" | "+" | "*" | "&" | "++" | "--")) => {
                let label = op.to_string();
                self.pos += 1;
                let operand = self.unary()?;
                Ok(self.push(NodeKind::UnaryExpr, label, vec![operand], start))
            }
            _ => self.postfix(),
        }
    }

    /// Binary operator precedence tiers, lowest first.
    fn binary(&mut self, level: usize) -> PResult<NodeId> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!="],
            &["<", "<=", ">", ">="],
            &["<<", ">>"],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let start = self.pos;
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Op && LEVELS[level].contains(&t.lexeme.as_str()) => {
                    t.lexeme.clone()
                }
                _ => break,
            };
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = self.push(NodeKind::BinaryExpr, op, vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn assign_expr(&mut self) -> PResult<NodeId> {
        const ASSIGN_OPS: &[&str] = &[
            "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=",
        ];
        let start = self.pos;
        let lhs = self.binary(0)?;
        match self.peek() {
            Some(t) if t.kind == TokenKind::Op && ASSIGN_OPS.contains(&t.lexeme.as_str()) => {
                let op = t.lexeme.clone();
                self.pos += 1;
                let rhs = self.assign_expr()?;
                Ok(self.push(NodeKind::AssignExpr, op, vec![lhs, rhs], start))
            }
            _ => Ok(lhs),
        }
    }

    // ----------------------------------------------------------- statements

    fn stmt(&mut self) -> NodeId {
        let start = self.pos;
        match self.try_stmt() {
            Ok(id) => id,
            Err(Fail) => self.opaque_recover(start),
        }
    }

    fn try_stmt(&mut self) -> PResult<NodeId> {
        if self.at_pp_line() {
            return Ok(self.pp_opaque());
        }
        let start = self.pos;
        let t = self.peek().ok_or(Fail)?;
        match t.lexeme.as_str() {
            "{" => self.compound(),
            "if" => {
                self.pos += 1;
                self.eat("(")?;
                let cond = self.assign_expr()?;
                self.eat(")")?;
                let then = self.stmt();
                let mut children = vec![cond, then];
                if self.at_lexeme("else") {
                    self.pos += 1;
                    children.push(self.stmt());
                }
                Ok(self.push(NodeKind::IfStmt, String::new(), children, start))
            }
            "while" => {
                self.pos += 1;
                self.eat("(")?;
                let cond = self.assign_expr()?;
                self.eat(")")?;
                let body = self.stmt();
                Ok(self.push(NodeKind::WhileStmt, String::new(), vec![cond, body], start))
            }
            "for" => {
                self.pos += 1;
                self.eat("(")?;
                let init = if self.at_type_start() {
                    let dstart = self.pos;
                    let ty = self.type_spec()?;
                    let ty = self.pointer_stars(ty);
                    let name = self.ident()?;
                    self.eat("=")?;
                    let val = self.assign_expr()?;
                    self.push(NodeKind::DeclStmt, String::new(), vec![ty, name, val], dstart)
                } else {
                    self.assign_expr()?
                };
                self.eat(";")?;
                let cond = self.assign_expr()?;
                self.eat(";")?;
                let step = self.assign_expr()?;
                self.eat(")")?;
                let body = self.stmt();
                Ok(self.push(
                    NodeKind::ForStmt,
                    String::new(),
                    vec![init, cond, step, body],
                    start,
                ))
            }
            "return" => {
                self.pos += 1;
                let mut children = Vec::new();
                if !self.at_lexeme(";") {
                    children.push(self.assign_expr()?);
                }
                self.eat(";")?;
                Ok(self.push(NodeKind::ReturnStmt, String::new(), children, start))
            }
            "break" => {
                self.pos += 1;
                self.eat(";")?;
                Ok(self.push(NodeKind::BreakStmt, String::new(), Vec::new(), start))
            }
            "continue" => {
                self.pos += 1;
                self.eat(";")?;
                Ok(self.push(NodeKind::ContinueStmt, String::new(), Vec::new(), start))
            }
            ";" => {
                self.pos += 1;
                Ok(self.push(NodeKind::OpaqueStmt, ";".into(), Vec::new(), start))
            }
            _ if self.at_type_start() => self.decl_stmt(),
            _ => {
                let expr = self.assign_expr()?;
                self.eat(";")?;
                Ok(self.push(NodeKind::ExprStmt, String::new(), vec![expr], start))
            }
        }
    }

    fn compound(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.eat("{")?;
        let mut children = Vec::new();
        while let Some(t) = self.peek() {
            if t.lexeme == "}" {
                break;
            }
            children.push(self.stmt());
        }
        self.eat("}")?;
        Ok(self.push(NodeKind::CompoundStmt, String::new(), children, start))
    }

    /// Declaration statement. Pointer stars of the first declarator wrap the
    /// type; later declarators' stars stay as raw tokens of the statement.
    fn decl_stmt(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let ty = self.type_spec()?;
        let ty = self.pointer_stars(ty);
        let mut children = vec![ty];
        loop {
            while self.at_lexeme("*") {
                self.pos += 1;
            }
            let name = self.ident()?;
            let name = if self.at_lexeme("[") {
                let istart = self.nodes[name].tok_start;
                self.pos += 1;
                let mut idx_children = vec![name];
                if !self.at_lexeme("]") {
                    idx_children.push(self.assign_expr()?);
                }
                self.eat("]")?;
                self.push(NodeKind::IndexExpr, String::new(), idx_children, istart)
            } else {
                name
            };
            children.push(name);
            if self.at_lexeme("=") {
                self.pos += 1;
                children.push(self.assign_expr()?);
            }
            if self.at_lexeme(",") {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.eat(";")?;
        Ok(self.push(NodeKind::DeclStmt, String::new(), children, start))
    }

    // ------------------------------------------------------------ top level

    fn param(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.at_lexeme("...") {
            self.pos += 1;
            return Ok(self.push(NodeKind::Param, "...".into(), Vec::new(), start));
        }
        let ty = self.type_spec()?;
        let ty = self.pointer_stars(ty);
        let mut children = vec![ty];
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident) {
            let name = self.ident()?;
            let name = if self.at_lexeme("[") {
                let istart = self.nodes[name].tok_start;
                self.pos += 1;
                let mut idx_children = vec![name];
                if !self.at_lexeme("]") {
                    idx_children.push(self.assign_expr()?);
                }
                self.eat("]")?;
                self.push(NodeKind::IndexExpr, String::new(), idx_children, istart)
            } else {
                name
            };
            children.push(name);
        }
        Ok(self.push(NodeKind::Param, String::new(), children, start))
    }

    fn param_list(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.eat("(")?;
        let mut children = Vec::new();
        if self.at_lexeme("void") && self.peek_at(1).map(|t| t.lexeme == ")").unwrap_or(false) {
            self.pos += 1;
        } else if !self.at_lexeme(")") {
            loop {
                children.push(self.param()?);
                if self.at_lexeme(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.eat(")")?;
        Ok(self.push(NodeKind::ParamList, String::new(), children, start))
    }

    fn top_item(&mut self) -> NodeId {
        if self.at_pp_line() {
            return self.pp_opaque();
        }
        let start = self.pos;
        match self.try_top_item() {
            Ok(id) => id,
            Err(Fail) => self.opaque_recover(start),
        }
    }

    fn try_top_item(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if !self.at_type_start() {
            return Err(Fail);
        }
        let ty = self.type_spec()?;
        let ty = self.pointer_stars(ty);
        let name = self.ident()?;
        if self.at_lexeme("(") {
            let params = self.param_list()?;
            if self.at_lexeme("{") {
                let body = self.compound()?;
                return Ok(self.push(
                    NodeKind::FunctionDef,
                    String::new(),
                    vec![ty, name, params, body],
                    start,
                ));
            }
            self.eat(";")?;
            return Ok(self.push(
                NodeKind::DeclStmt,
                String::new(),
                vec![ty, name, params],
                start,
            ));
        }
        // Global variable: reuse the statement-level declaration shape.
        self.pos = start;
        self.decl_stmt()
    }

    fn unit(&mut self) -> NodeId {
        let mut children = Vec::new();
        while self.peek().is_some() {
            children.push(self.top_item());
        }
        self.push(NodeKind::TranslationUnit, String::new(), children, 0)
    }
}

/// What a detached token fragment should parse as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    Stmt,
    Expr,
}

/// Parse a detached token slice as a single statement or expression. All
/// tokens must be consumed and nothing may fall back to `OpaqueStmt` (other
/// than a lone `;`); used by the pattern-term parser.
pub fn parse_fragment(tokens: &[Token], frag: Fragment) -> Option<(Vec<AstNode>, NodeId)> {
    let mut parser = Parser {
        toks: tokens,
        pos: 0,
        nodes: Vec::new(),
    };
    let root = match frag {
        Fragment::Stmt => parser.try_stmt().ok()?,
        Fragment::Expr => parser.assign_expr().ok()?,
    };
    if parser.pos != tokens.len() {
        return None;
    }
    if frag == Fragment::Stmt {
        let has_opaque = parser
            .nodes
            .iter()
            .any(|n| n.kind == NodeKind::OpaqueStmt && n.label != ";");
        if has_opaque {
            return None;
        }
    }
    Some((parser.nodes, root))
}

/// Parse a whole source file. Never fails: unanalyzable regions become
/// `OpaqueStmt` and a lexically broken file collapses to one opaque unit.
pub fn parse_unit(source: &str, file: &str) -> AstUnit {
    let stream = match tokenize(source, file) {
        Ok(s) => s,
        Err(_) => {
            // Pathological input: keep the whole file as one opaque token so
            // printing still reproduces it byte-for-byte.
            let token = Token {
                kind: TokenKind::Punct,
                lexeme: source.to_string(),
                line: 1,
                col: 1,
                trivia: String::new(),
            };
            let nodes = vec![
                AstNode {
                    kind: NodeKind::OpaqueStmt,
                    label: source.to_string(),
                    children: vec![],
                    tok_start: 0,
                    tok_end: 1,
                },
                AstNode {
                    kind: NodeKind::TranslationUnit,
                    label: String::new(),
                    children: vec![0],
                    tok_start: 0,
                    tok_end: 1,
                },
            ];
            return AstUnit {
                file: file.to_string(),
                source: source.to_string(),
                tokens: if source.is_empty() { vec![] } else { vec![token] },
                eof_trivia: String::new(),
                nodes,
                root: 1,
                degenerate: true,
            };
        }
    };
    let mut parser = Parser {
        toks: &stream.tokens,
        pos: 0,
        nodes: Vec::new(),
    };
    let root = parser.unit();
    let nodes = parser.nodes;
    let top = nodes[root].children.clone();
    let degenerate = !top.is_empty() && top.iter().all(|&c| nodes[c].kind == NodeKind::OpaqueStmt);
    AstUnit {
        file: file.to_string(),
        source: source.to_string(),
        tokens: stream.tokens,
        eof_trivia: stream.eof_trivia,
        nodes,
        root,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_of(unit: &AstUnit, ids: &[NodeId]) -> Vec<NodeKind> {
        ids.iter().map(|&i| unit.node(i).kind).collect()
    }

    #[test]
    fn empty_file() {
        let u = parse_unit("", "t.c");
        assert_eq!(u.node(u.root).kind, NodeKind::TranslationUnit);
        assert!(u.children(u.root).is_empty());
        assert!(!u.degenerate);
    }

    #[test]
    fn include_line_is_opaque() {
        let u = parse_unit("#include <stdio.h>\n", "t.c");
        let top = u.children(u.root);
        assert_eq!(top.len(), 1);
        assert_eq!(u.node(top[0]).kind, NodeKind::OpaqueStmt);
        assert!(u.degenerate);
    }

    #[test]
    fn listing2_shape() {
        let src = "int get_age(int alive, struct person *pers, char *context){\n\
                   int age=0;\n\
                   if (alive == 1 && pers !=NULL)\n\
                   \x20   age=pers->age_death - pers->age;\n\
                   else\n\
                   \x20   age = pers->age;\n\
                   return age;\n\
                   }\n";
        let u = parse_unit(src, "listing2.c");
        let funcs = u.functions();
        assert_eq!(funcs.len(), 1);
        assert_eq!(u.function_name(funcs[0]), "get_age");
        let f = u.node(funcs[0]);
        let params = u.children(f.children[2]);
        assert_eq!(params.len(), 3);
        let body = u.children(f.children[3]);
        assert_eq!(
            kinds_of(&u, body),
            vec![NodeKind::DeclStmt, NodeKind::IfStmt, NodeKind::ReturnStmt]
        );
        // if has an else branch: 3 children
        let if_stmt = u.node(body[1]);
        assert_eq!(if_stmt.children.len(), 3);
        // second param type is struct person *
        let p = u.node(params[1]);
        let ptype = u.node(p.children[0]);
        assert_eq!(ptype.kind, NodeKind::PointerType);
        assert_eq!(u.node(ptype.children[0]).label, "struct person");
    }

    #[test]
    fn field_access_chain() {
        let u = parse_unit("void f(void){ x = a->b.c; }", "t.c");
        let f = u.functions()[0];
        let body = u.children(u.node(f).children[3]);
        let assign = u.children(body[0])[0];
        let rhs = u.children(assign)[1];
        assert_eq!(u.node(rhs).kind, NodeKind::FieldAccess);
        assert_eq!(u.node(rhs).label, ".");
        let base = u.children(rhs)[0];
        assert_eq!(u.node(base).label, "->");
    }

    #[test]
    fn bad_statement_becomes_opaque() {
        let u = parse_unit("void f(void){ int x = 1; @garbage@ here; x = 2; }", "t.c");
        let f = u.functions()[0];
        let body = u.children(u.node(f).children[3]);
        assert_eq!(
            kinds_of(&u, body),
            vec![NodeKind::DeclStmt, NodeKind::OpaqueStmt, NodeKind::ExprStmt]
        );
    }

    #[test]
    fn struct_definition_is_opaque_not_fatal() {
        let u = parse_unit("struct p { int x; };\nint f(void){ return 0; }", "t.c");
        let top = u.children(u.root);
        assert_eq!(u.node(top[0]).kind, NodeKind::OpaqueStmt);
        assert_eq!(u.node(top[1]).kind, NodeKind::FunctionDef);
        assert!(!u.degenerate);
    }

    #[test]
    fn spans_nested_and_ordered() {
        let src = "int f(int a){ if (a > 0) return a; return 0; }";
        let u = parse_unit(src, "t.c");
        for (id, n) in u.nodes.iter().enumerate() {
            let mut prev_end = n.tok_start;
            for &c in &n.children {
                let cn = u.node(c);
                assert!(cn.tok_start >= prev_end, "overlap under node {id}");
                assert!(cn.tok_end <= n.tok_end, "child escapes parent {id}");
                prev_end = cn.tok_end;
            }
            if n.children.is_empty() {
                assert!(n.tok_end > n.tok_start, "leaf without tokens: {id}");
            }
        }
    }

    #[test]
    fn for_loop_requires_all_clauses() {
        let u = parse_unit("void f(void){ for (i = 0; i < 9; i++) g(i); }", "t.c");
        let f = u.functions()[0];
        let body = u.children(u.node(f).children[3]);
        assert_eq!(u.node(body[0]).kind, NodeKind::ForStmt);
        assert_eq!(u.children(body[0]).len(), 4);

        let u2 = parse_unit("void f(void){ for (;;) g(); }", "t.c");
        let f2 = u2.functions()[0];
        let body2 = u2.children(u2.node(f2).children[3]);
        assert_eq!(u2.node(body2[0]).kind, NodeKind::OpaqueStmt);
    }

    #[test]
    fn prototype_is_declaration() {
        let u = parse_unit("int foo(int x);\n", "t.c");
        let top = u.children(u.root);
        assert_eq!(u.node(top[0]).kind, NodeKind::DeclStmt);
    }

    #[test]
    fn call_with_args() {
        let u = parse_unit("void f(void){ foo(a, 0); }", "t.c");
        let f = u.functions()[0];
        let body = u.children(u.node(f).children[3]);
        let call = u.children(body[0])[0];
        assert_eq!(u.node(call).kind, NodeKind::CallExpr);
        assert_eq!(u.children(call).len(), 3);
        assert_eq!(u.node_tokens(call), "foo ( a , 0 )");
    }
}
