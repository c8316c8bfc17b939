//! Lossless tokenizer for the MiniC subset.
//!
//! Whitespace and comments are recorded as trivia attached to the *following*
//! token; trailing trivia after the last token is kept on the stream. This
//! makes `print` a pure concatenation and guarantees byte-exact round trips.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TokenKind {
    Keyword,
    Ident,
    Number,
    Str,
    Char,
    Op,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line of the first lexeme character.
    pub line: u32,
    /// 1-based column of the first lexeme character.
    pub col: u32,
    /// Whitespace and comments preceding this token.
    pub trivia: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Trivia after the final token (or the whole file if it is all trivia).
    pub eof_trivia: String,
}

impl TokenStream {
    /// Reconstruct the input byte-for-byte.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.trivia);
            out.push_str(&t.lexeme);
        }
        out.push_str(&self.eof_trivia);
        out
    }
}

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "return",
    "short", "signed", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while",
];

/// Multi-character operators, longest first so maximal munch falls out of
/// the scan order.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<", ">", "=", "+", "-", "*", "/", "%", "!", "~",
    "&", "|", "^", "?", ":", ".",
];

const PUNCTS: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '#'];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    file: String,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn err(&self, msg: &str) -> Error {
        Error::Lex {
            file: self.file.clone(),
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    /// Consume whitespace and comments, returning them verbatim.
    fn trivia(&mut self) -> Result<String> {
        let start = self.pos;
        loop {
            match self.peek() {
                Some(b) if (b as char).is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let err = self.err("unterminated block comment");
                    self.bump();
                    self.bump();
                    let mut closed = false;
                    while let Some(b) = self.bump() {
                        if b == b'*' && self.peek() == Some(b'/') {
                            self.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        return Err(err);
                    }
                }
                _ => break,
            }
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn quoted(&mut self, quote: u8, what: &str) -> Result<()> {
        let err = self.err(&format!("unterminated {what}"));
        self.bump(); // opening quote
        loop {
            match self.bump() {
                None => return Err(err),
                Some(b'\n') => return Err(err),
                Some(b'\\') => {
                    if self.bump().is_none() {
                        return Err(err);
                    }
                }
                Some(b) if b == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }

    fn number(&mut self) {
        // Integer and float forms, including hex and exponent suffixes. The
        // exact sub-grammar does not matter downstream; the lexeme is kept raw.
        let mut prev = 0u8;
        while let Some(b) = self.peek() {
            let c = b as char;
            let cont = c.is_ascii_alphanumeric()
                || c == '.'
                || c == '_'
                || ((c == '+' || c == '-') && matches!(prev, b'e' | b'E' | b'p' | b'P'));
            if !cont {
                break;
            }
            prev = b;
            self.bump();
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        let trivia = self.trivia()?;
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        let b = match self.peek() {
            None => {
                // Caller stores the trailing trivia.
                self.pos = start;
                return Ok(if trivia.is_empty() {
                    None
                } else {
                    Some(Token {
                        kind: TokenKind::Punct,
                        lexeme: String::new(),
                        line,
                        col,
                        trivia,
                    })
                });
            }
            Some(b) => b,
        };

        let kind = match b {
            b'"' => {
                self.quoted(b'"', "string literal")?;
                TokenKind::Str
            }
            b'\'' => {
                self.quoted(b'\'', "character literal")?;
                TokenKind::Char
            }
            b'0'..=b'9' => {
                self.number();
                TokenKind::Number
            }
            b'.' if matches!(self.peek_at(1), Some(b'0'..=b'9')) => {
                self.number();
                TokenKind::Number
            }
            b'_' | b'a'..=b'z' | b'A'..=b'Z' => {
                while let Some(c) = self.peek() {
                    if (c as char).is_ascii_alphanumeric() || c == b'_' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..self.pos];
                if KEYWORDS.contains(&std::str::from_utf8(text).unwrap_or("")) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                }
            }
            _ if PUNCTS.contains(&(b as char)) => {
                self.bump();
                TokenKind::Punct
            }
            _ => {
                let rest = &self.src[self.pos..];
                let op = OPERATORS
                    .iter()
                    .find(|op| rest.starts_with(op.as_bytes()))
                    .copied();
                match op {
                    Some(op) => {
                        for _ in 0..op.len() {
                            self.bump();
                        }
                        TokenKind::Op
                    }
                    None => {
                        // Unknown byte (e.g. `\` in a preprocessor continuation
                        // or `@` in pattern text): a one-byte punctuation token,
                        // never a failure.
                        self.bump();
                        TokenKind::Punct
                    }
                }
            }
        };

        let lexeme = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        Ok(Some(Token {
            kind,
            lexeme,
            line,
            col,
            trivia,
        }))
    }
}

/// Tokenize MiniC source text.
pub fn tokenize(source: &str, file: &str) -> Result<TokenStream> {
    let mut lexer = Lexer {
        src: source.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
        file: file.to_string(),
    };
    let mut tokens = Vec::new();
    let mut eof_trivia = String::new();
    loop {
        match lexer.next_token()? {
            None => break,
            Some(t) if t.lexeme.is_empty() => {
                eof_trivia = t.trivia;
                break;
            }
            Some(t) => tokens.push(t),
        }
    }
    Ok(TokenStream { tokens, eof_trivia })
}

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(src: &str) -> TokenStream {
        tokenize(src, "t.c").unwrap()
    }

    #[test]
    fn simple_declaration() {
        let ts = lex("int x;");
        let kinds: Vec<_> = ts.tokens.iter().map(|t| (t.kind, t.lexeme.as_str())).collect();
        assert_eq!(
            kinds,
            vec![
                (TokenKind::Keyword, "int"),
                (TokenKind::Ident, "x"),
                (TokenKind::Punct, ";"),
            ]
        );
    }

    #[test]
    fn empty_input() {
        let ts = lex("");
        assert!(ts.tokens.is_empty());
        assert_eq!(ts.eof_trivia, "");
    }

    #[test]
    fn arrow_maximal_munch() {
        let ts = lex("pers->age");
        let lexemes: Vec<_> = ts.tokens.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lexemes, vec!["pers", "->", "age"]);
        assert_eq!(ts.tokens[1].kind, TokenKind::Op);
    }

    #[test]
    fn round_trip_with_comments() {
        let src = "int a = 1; /* c1 */\n  // line\nchar *s = \"x // y\";\n";
        assert_eq!(lex(src).to_source(), src);
    }

    #[test]
    fn positions_are_one_based() {
        let ts = lex("a\n  bb");
        assert_eq!((ts.tokens[0].line, ts.tokens[0].col), (1, 1));
        assert_eq!((ts.tokens[1].line, ts.tokens[1].col), (2, 3));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let e = tokenize("char *s = \"oops;\n", "t.c").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("unterminated string"), "{msg}");
        assert!(msg.contains("t.c:1:11"), "{msg}");
    }

    #[test]
    fn unterminated_comment_is_an_error() {
        assert!(tokenize("/* never closed", "t.c").is_err());
    }

    #[test]
    fn trailing_trivia_preserved() {
        let ts = lex("x  \n\n");
        assert_eq!(ts.eof_trivia, "  \n\n");
        assert_eq!(ts.to_source(), "x  \n\n");
    }
}
