//! Arena-backed syntax tree for MiniC.
//!
//! Nodes own half-open token ranges into the unit's token vector; printing is
//! a token-stream concatenation, so the tree cannot drift from the source.

use serde::{Deserialize, Serialize};

use super::lex::{Token, TokenStream};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    TranslationUnit,
    FunctionDef,
    ParamList,
    Param,
    CompoundStmt,
    DeclStmt,
    ExprStmt,
    IfStmt,
    WhileStmt,
    ForStmt,
    ReturnStmt,
    BreakStmt,
    ContinueStmt,
    OpaqueStmt,
    BinaryExpr,
    UnaryExpr,
    CallExpr,
    FieldAccess,
    IndexExpr,
    AssignExpr,
    Identifier,
    Literal,
    TypeName,
    PointerType,
}

impl NodeKind {
    pub fn is_stmt(self) -> bool {
        matches!(
            self,
            NodeKind::CompoundStmt
                | NodeKind::DeclStmt
                | NodeKind::ExprStmt
                | NodeKind::IfStmt
                | NodeKind::WhileStmt
                | NodeKind::ForStmt
                | NodeKind::ReturnStmt
                | NodeKind::BreakStmt
                | NodeKind::ContinueStmt
                | NodeKind::OpaqueStmt
        )
    }

    pub fn is_expr(self) -> bool {
        matches!(
            self,
            NodeKind::BinaryExpr
                | NodeKind::UnaryExpr
                | NodeKind::CallExpr
                | NodeKind::FieldAccess
                | NodeKind::IndexExpr
                | NodeKind::AssignExpr
                | NodeKind::Identifier
                | NodeKind::Literal
        )
    }

    /// Name used in rich edit scripts, e.g. `IfStmt`, `BinaryExpr`.
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::TranslationUnit => "TranslationUnit",
            NodeKind::FunctionDef => "FunctionDef",
            NodeKind::ParamList => "ParamList",
            NodeKind::Param => "Param",
            NodeKind::CompoundStmt => "CompoundStmt",
            NodeKind::DeclStmt => "DeclStmt",
            NodeKind::ExprStmt => "ExprStmt",
            NodeKind::IfStmt => "IfStmt",
            NodeKind::WhileStmt => "WhileStmt",
            NodeKind::ForStmt => "ForStmt",
            NodeKind::ReturnStmt => "ReturnStmt",
            NodeKind::BreakStmt => "BreakStmt",
            NodeKind::ContinueStmt => "ContinueStmt",
            NodeKind::OpaqueStmt => "OpaqueStmt",
            NodeKind::BinaryExpr => "BinaryExpr",
            NodeKind::UnaryExpr => "UnaryExpr",
            NodeKind::CallExpr => "CallExpr",
            NodeKind::FieldAccess => "FieldAccess",
            NodeKind::IndexExpr => "IndexExpr",
            NodeKind::AssignExpr => "AssignExpr",
            NodeKind::Identifier => "Identifier",
            NodeKind::Literal => "Literal",
            NodeKind::TypeName => "TypeName",
            NodeKind::PointerType => "PointerType",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        use NodeKind::*;
        let all = [
            TranslationUnit,
            FunctionDef,
            ParamList,
            Param,
            CompoundStmt,
            DeclStmt,
            ExprStmt,
            IfStmt,
            WhileStmt,
            ForStmt,
            ReturnStmt,
            BreakStmt,
            ContinueStmt,
            OpaqueStmt,
            BinaryExpr,
            UnaryExpr,
            CallExpr,
            FieldAccess,
            IndexExpr,
            AssignExpr,
            Identifier,
            Literal,
            TypeName,
            PointerType,
        ];
        all.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    /// Salient text: operator lexeme, identifier/literal lexeme, type text,
    /// `->`/`.` for field access, joined tokens for opaque statements.
    pub label: String,
    pub children: Vec<NodeId>,
    /// Half-open range into the unit token vector.
    pub tok_start: usize,
    pub tok_end: usize,
}

/// A source position (1-based line and column).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourcePos {
    pub file: String,
    pub line: u32,
    pub col: u32,
}

/// A parsed source file plus its token stream.
#[derive(Debug, Clone)]
pub struct AstUnit {
    pub file: String,
    pub source: String,
    pub tokens: Vec<Token>,
    pub eof_trivia: String,
    pub nodes: Vec<AstNode>,
    pub root: NodeId,
    /// True when the top level is entirely opaque.
    pub degenerate: bool,
}

impl AstUnit {
    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// Space-joined lexemes of the node's token range.
    pub fn node_tokens(&self, id: NodeId) -> String {
        let n = self.node(id);
        self.tokens[n.tok_start..n.tok_end]
            .iter()
            .map(|t| t.lexeme.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Position of the node's first token.
    pub fn node_pos(&self, id: NodeId) -> SourcePos {
        let n = self.node(id);
        let t = &self.tokens[n.tok_start];
        SourcePos {
            file: self.file.clone(),
            line: t.line,
            col: t.col,
        }
    }

    /// True iff `outer` contains `inner` (token-range containment; a node
    /// contains itself).
    pub fn contains(&self, outer: NodeId, inner: NodeId) -> bool {
        let o = self.node(outer);
        let i = self.node(inner);
        o.tok_start <= i.tok_start && i.tok_end <= o.tok_end
    }

    /// Pre-order walk of a subtree.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        self.descendants(id).len()
    }

    /// All `FunctionDef` ids in source order.
    pub fn functions(&self) -> Vec<NodeId> {
        self.children(self.root)
            .iter()
            .copied()
            .filter(|&c| self.node(c).kind == NodeKind::FunctionDef)
            .collect()
    }

    /// Name of a function definition.
    pub fn function_name(&self, func: NodeId) -> &str {
        let n = self.node(func);
        debug_assert_eq!(n.kind, NodeKind::FunctionDef);
        &self.node(n.children[1]).label
    }

    /// Byte offsets of a node's lexeme extent in the original source.
    pub fn byte_span(&self, id: NodeId) -> (usize, usize) {
        let n = self.node(id);
        let mut offset = 0usize;
        let mut start = 0usize;
        let mut end = 0usize;
        for (i, t) in self.tokens.iter().enumerate() {
            offset += t.trivia.len();
            if i == n.tok_start {
                start = offset;
            }
            offset += t.lexeme.len();
            if i + 1 == n.tok_end {
                end = offset;
                break;
            }
        }
        (start, end)
    }

    /// Lossless source reconstruction.
    pub fn print(&self) -> String {
        let ts = TokenStream {
            tokens: self.tokens.clone(),
            eof_trivia: self.eof_trivia.clone(),
        };
        ts.to_source()
    }

    /// Structural equality of two subtrees: kind, label and child structure,
    /// ignoring positions and trivia (and parentheses, which only widen token
    /// ranges).
    pub fn structural_eq(&self, a: NodeId, other: &AstUnit, b: NodeId) -> bool {
        let na = self.node(a);
        let nb = other.node(b);
        if na.kind != nb.kind || na.label != nb.label || na.children.len() != nb.children.len() {
            return false;
        }
        na.children
            .iter()
            .zip(nb.children.iter())
            .all(|(&ca, &cb)| self.structural_eq(ca, other, cb))
    }

    /// Structural fingerprint of a subtree, aligned with `structural_eq`.
    pub fn structural_hash(&self, id: NodeId) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        fn walk(unit: &AstUnit, id: NodeId, h: &mut impl Hasher) {
            let n = unit.node(id);
            n.kind.hash(h);
            n.label.hash(h);
            n.children.len().hash(h);
            for &c in &n.children {
                walk(unit, c, h);
            }
        }
        walk(self, id, &mut h);
        h.finish()
    }
}
