use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}:{col}: lexical error: {msg}")]
    Lex {
        file: String,
        line: u32,
        col: u32,
        msg: String,
    },

    #[error("malformed diff: {0}")]
    MalformedDiff(String),

    #[error("stale hunk: {0}")]
    StaleHunk(String),

    #[error("mining error: {0}")]
    Mining(String),

    #[error("input error: {path}: {msg}")]
    Input { path: PathBuf, msg: String },

    #[error("{file}:{line}:{col}: pattern syntax error: {msg}")]
    PatternSyntax {
        file: String,
        line: u32,
        col: u32,
        msg: String,
    },

    #[error("{file}:{line}: unsupported construct: {msg}")]
    UnsupportedConstruct { file: String, line: u32, msg: String },

    #[error("pattern validation failed: {0}")]
    PatternInvalid(String),

    #[error("edit script parse error at line {line}: {msg}")]
    ScriptParse { line: usize, msg: String },

    #[error("degenerate rule: {0}")]
    DegenerateRule(String),

    #[error("path enumeration budget exceeded in {function}")]
    PathBudget { function: String },

    #[error("no generalization: terms disagree at the root ({0})")]
    NoGeneralization(String),

    #[error("pattern database error: {0}")]
    PatternDb(String),

    #[error("sandbox error: {0}")]
    Sandbox(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
